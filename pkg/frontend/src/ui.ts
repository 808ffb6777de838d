/** DOM rendering for the trial runner.
 *
 * Pure view layer: it subscribes to runner state and forwards clicks and
 * arrow keys; every rule (single playback, button gating, one response
 * per trial) lives in the state machine, so nothing here needs to be
 * clever.
 */

import { TrialRunner, RunnerState } from "./runner.js";

export interface MountHandle {
  unmount: () => void;
}

export function mount(root: HTMLElement, runner: TrialRunner): MountHandle {
  root.innerHTML = `
    <div class="prosorc-runner">
      <div data-role="progress-track"><div data-role="progress-fill"></div></div>
      <p data-role="prompt"></p>
      <div data-role="buttons">
        <button data-role="left" disabled></button>
        <button data-role="right" disabled></button>
      </div>
      <p data-role="hint"></p>
      <button data-role="begin" hidden>Start</button>
    </div>`;

  const el = {
    fill: root.querySelector<HTMLElement>('[data-role="progress-fill"]')!,
    prompt: root.querySelector<HTMLElement>('[data-role="prompt"]')!,
    left: root.querySelector<HTMLButtonElement>('[data-role="left"]')!,
    right: root.querySelector<HTMLButtonElement>('[data-role="right"]')!,
    hint: root.querySelector<HTMLElement>('[data-role="hint"]')!,
    begin: root.querySelector<HTMLButtonElement>('[data-role="begin"]')!,
  };

  el.begin.addEventListener("click", () => runner.beginTrials());
  el.left.addEventListener("click", () => choose(el.left));
  el.right.addEventListener("click", () => choose(el.right));

  function choose(button: HTMLButtonElement): void {
    const label = button.dataset.label;
    if (label !== undefined) runner.choose(label);
  }

  function onKey(event: KeyboardEvent): void {
    if (event.key === "ArrowLeft") choose(el.left);
    else if (event.key === "ArrowRight") choose(el.right);
  }
  document.addEventListener("keydown", onKey);

  function render(state: RunnerState): void {
    const { phase, trial, progress } = state;

    if (trial !== null) {
      const [left, right] = trial.options;
      el.left.textContent = left;
      el.left.dataset.label = left;
      el.right.textContent = right;
      el.right.dataset.label = right;
    }
    const clickable = phase === "choosing";
    el.left.disabled = !clickable;
    el.right.disabled = !clickable;
    el.begin.hidden = phase !== "practice";

    if (progress !== null) {
      el.fill.style.width = `${(100 * progress.answered) / progress.total}%`;
    }
    if (phase === "done") el.fill.style.width = "100%";

    el.prompt.textContent = promptFor(state);
    el.hint.textContent =
      phase === "choosing" ? "click a word, or use the left/right arrow keys" : "";
  }

  const unsubscribe = runner.onChange(render);
  render(runner.getState());
  return {
    unmount: () => {
      unsubscribe();
      document.removeEventListener("keydown", onKey);
      root.innerHTML = "";
    },
  };
}

export function promptFor(state: RunnerState): string {
  switch (state.phase) {
    case "idle":
      return "";
    case "practice":
      return (
        "You will hear a short recording on each trial. Listen to the end, " +
        "then click the word you heard. Press Start when ready."
      );
    case "loading":
      return state.attempt > 1 ? `connection trouble, retrying (${state.attempt})...` : "loading...";
    case "playing":
      return "listen...";
    case "choosing":
      return "which word did you hear?";
    case "posting":
      return state.attempt > 1 ? `saving, retrying (${state.attempt})...` : "saving...";
    case "done":
      return "All done - thank you! You can close this window.";
    case "failed":
      return `something went wrong: ${state.error ?? "unknown error"}. Reload the page to resume.`;
  }
}
