/** Browser entry point.
 *
 * Reads the session id from ?session=... (same-origin deployment behind
 * the experiment server, which also serves the audio), wires the real
 * fetch and audio element into the runner, and mounts the UI.
 */

import { ApiClient, makeFetchJson } from "./api.js";
import { TrialRunner } from "./runner.js";
import { mount } from "./ui.js";

function playAudio(url: string): Promise<void> {
  return new Promise((resolve, reject) => {
    const audio = new Audio(url);
    audio.addEventListener("ended", () => resolve(), { once: true });
    audio.addEventListener(
      "error",
      () => reject(new Error(`could not play ${url}`)),
      { once: true },
    );
    audio.play().catch(reject);
  });
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}

export function boot(root: HTMLElement): void {
  const params = new URLSearchParams(window.location.search);
  const sessionId = params.get("session");
  if (sessionId === null || sessionId === "") {
    root.textContent = "missing ?session=<id> in the URL";
    return;
  }
  const api = new ApiClient(window.location.origin, sessionId, makeFetchJson());
  const runner = new TrialRunner({ api, playAudio, now: () => performance.now(), sleep });
  mount(root, runner);
  void runner.start();
}

const rootElement = document.getElementById("app");
if (rootElement !== null) boot(rootElement);
