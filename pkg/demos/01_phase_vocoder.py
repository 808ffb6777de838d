"""
Time stretching and pitch shifting with the phase vocoder
=========================================================

The vocoder module changes the duration and the pitch of a recording
independently of each other.  Both operations accept either a constant
amount or a breakpoint function of time, so a single call can speed a
phrase up at the start and slow it down at the end.

This script works on a synthetic 220 Hz tone so every claim can be
verified with an FFT right here in the output.
"""

from pathlib import Path

import numpy as np

from prosorc import AudioBuffer, pitch_shift, time_stretch, write_wav

out_dir = Path(__file__).parent / "output" / "phase_vocoder"
out_dir.mkdir(parents=True, exist_ok=True)

sr = 44100
t = np.arange(int(0.8 * sr)) / sr
tone = AudioBuffer(0.4 * np.sin(2 * np.pi * 220.0 * t), sr)
write_wav(out_dir / "tone_220hz.wav", tone)


def dominant_hz(audio):
    spectrum = np.abs(np.fft.rfft(audio.samples * np.hanning(len(audio))))
    return np.fft.rfftfreq(len(audio), 1.0 / audio.sample_rate)[np.argmax(spectrum)]


# A stretch factor is expressed in log2 units: +1 doubles the duration,
# -1 halves it, and the pitch must not move at all.
for amount, name in ((1.0, "double"), (-1.0, "half")):
    stretched = time_stretch(tone, amount)
    print(f"stretch {amount:+.0f} log2: {tone.duration_s:.2f}s -> "
          f"{stretched.duration_s:.2f}s, pitch stays {dominant_hz(stretched):.1f} Hz")
    write_wav(out_dir / f"tone_{name}_duration.wav", stretched)

# Pitch shifts are expressed in cents (100 cents = 1 semitone).  The
# duration must not move here.
for cents in (200.0, -200.0):
    shifted = pitch_shift(tone, cents)
    expected = 220.0 * 2.0 ** (cents / 1200.0)
    print(f"shift {cents:+.0f} cents: 220.0 Hz -> {dominant_hz(shifted):.1f} Hz "
          f"(expected {expected:.1f}), duration stays {shifted.duration_s:.2f}s")
    write_wav(out_dir / f"tone_{cents:+.0f}_cents.wav", shifted)

# Time-varying control: a (time, value) breakpoint array is interpolated
# linearly, so this ramp accelerates the tone from unchanged to double
# speed over its course.
ramp = np.array([[0.0, 0.0], [0.8, -1.0]])
accelerating = time_stretch(tone, ramp)
print(f"ramp 0 -> -1 log2: {tone.duration_s:.2f}s -> "
      f"{accelerating.duration_s:.2f}s (between x1 and x0.5)")
write_wav(out_dir / "tone_accelerating.wav", accelerating)

print(f"wrote audio to {out_dir}")
