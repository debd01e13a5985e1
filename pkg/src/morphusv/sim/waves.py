"""Seeded wave disturbance as generalised body-frame forces.

The force on each axis is a sinusoid at the wave frequency with a seeded
phase plus band-limited noise. The noise is a fixed sum of random-phase
sinusoids with frequencies drawn in ``noise_band``, so ``wave_force`` is a
pure function of time and identical seeds give bit-identical sequences.
"""
from dataclasses import dataclass
from functools import cached_property
from math import pi

import numpy as np


@dataclass(frozen=True)
class WaveDisturbance:
    frequency: float = 1.5           # Hz
    force_amplitude: float = 0.0     # N, on Fx and Fy
    moment_amplitude: float = 0.0    # N m, on Mz
    noise_std: float = 0.0           # N, per force axis
    moment_noise_std: float = 0.0    # N m
    seed: int = 0
    noise_band: tuple = (0.05, 2.0)  # Hz
    noise_components: int = 24

    def __post_init__(self):
        if self.frequency < 0 or min(self.force_amplitude, self.moment_amplitude,
                                     self.noise_std, self.moment_noise_std) < 0:
            raise ValueError("wave frequency, amplitudes and noise levels must be nonnegative")

    @cached_property
    def _components(self):
        rng = np.random.default_rng(self.seed)
        phases = rng.uniform(0.0, 2 * pi, 3)
        lo, hi = self.noise_band
        k = self.noise_components
        freqs = rng.uniform(lo, hi, (3, k))
        nphase = rng.uniform(0.0, 2 * pi, (3, k))
        # each component has amplitude sqrt(2/k) so the sum has unit RMS
        std = np.array([self.noise_std, self.noise_std, self.moment_noise_std])
        namp = std[:, None] * np.sqrt(2.0 / k) * np.ones((3, k))
        amp = np.array([self.force_amplitude, self.force_amplitude, self.moment_amplitude])
        return phases, amp, freqs, nphase, namp

    @property
    def is_calm(self):
        return not (self.force_amplitude or self.moment_amplitude or self.noise_std
                    or self.moment_noise_std)

    def sinusoid(self, t):
        phases, amp, *_ = self._components
        t = np.asarray(t, dtype=float)
        return amp * np.sin(2 * pi * self.frequency * t[..., None] + phases)

    def noise(self, t):
        _, _, freqs, nphase, namp = self._components
        t = np.asarray(t, dtype=float)
        arg = 2 * pi * freqs * t[..., None, None] + nphase
        return np.sum(namp * np.sin(arg), axis=-1)

    def __call__(self, t):
        return wave_force(self, t)


def wave_force(wd, t):
    """Disturbance ``[Fx, Fy, Mz]`` at time ``t`` (scalar or array of times)."""
    if wd is None or wd.is_calm:
        return np.zeros(np.shape(t) + (3,))
    return wd.sinusoid(t) + wd.noise(t)


CALM = WaveDisturbance()
