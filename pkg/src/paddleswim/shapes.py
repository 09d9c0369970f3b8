"""Gait definitions and the noisy shape-oscillator signal generator.

A gait is a 2*pi-periodic curve in shape space stored as a truncated Fourier
series; its first two phase derivatives come from exact term-wise
differentiation.  The gait period is fixed at T = 2*pi time units, so the
nominal phase rate is 1.

Noisy excitation for system identification is produced by perturbing a gait
with two independent processes, both smoothed by the same critically damped
second-order low-pass filter so that the generated signal stays C^1 with a
bounded, piecewise-continuous second derivative:

* a phase perturbation: an Euler-Maruyama random walk (the integrated
  ``phase_noise_std`` white noise) fed through the filter, which preserves the
  walk's long-time diffusion while removing its non-differentiable content;
* an additive shape perturbation per coordinate: zero-order-hold white noise
  through the filter, calibrated so the stationary output std equals
  ``amplitude_noise_std`` exactly.

Within filter intervals the state evolves in closed form, so the signal can
be evaluated exactly at arbitrary times; the generated process does not
depend on the sampling grid of the consumer.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

PERIOD = 2.0 * np.pi

__all__ = [
    "PERIOD", "Gait", "NoiseParams", "ShapeSeries",
    "manual_gait", "multiseg_flap_gait",
    "GaitSignal", "NoisyShapeSignal", "noisy_shape_signal",
]


@dataclass(frozen=True)
class Gait:
    """Periodic shape curve: offsets + sum_h (cos_h cos(h phi) + sin_h sin(h phi))."""

    offsets: np.ndarray          # (dim,)
    cos_coeffs: np.ndarray       # (order, dim)
    sin_coeffs: np.ndarray       # (order, dim)

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.atleast_1d(np.asarray(self.offsets, dtype=float)))
        object.__setattr__(self, "cos_coeffs", np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float)))
        object.__setattr__(self, "sin_coeffs", np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float)))
        if self.cos_coeffs.shape != self.sin_coeffs.shape:
            raise ConfigError("cos/sin coefficient arrays must have equal shapes")
        if self.cos_coeffs.shape[1] != self.dim:
            raise ConfigError("coefficient arrays do not match the offset dimension")

    @property
    def dim(self):
        return self.offsets.shape[0]

    @property
    def order(self):
        return self.cos_coeffs.shape[0]

    def evaluate(self, phi, deriv=0):
        """Evaluate the gait (deriv=0) or its phase derivatives (deriv=1, 2).

        ``phi`` may be a scalar or an array; the output has shape
        ``phi.shape + (dim,)``.
        """
        phi = np.asarray(phi, dtype=float)
        scalar = phi.ndim == 0
        phi = np.atleast_1d(phi)
        out = np.zeros(phi.shape + (self.dim,))
        if deriv == 0:
            out += self.offsets
        for h in range(1, self.order + 1):
            c, s = np.cos(h * phi)[..., None], np.sin(h * phi)[..., None]
            ch, sh = self.cos_coeffs[h - 1], self.sin_coeffs[h - 1]
            if deriv == 0:
                out += c * ch + s * sh
            elif deriv == 1:
                out += h * (-s * ch + c * sh)
            elif deriv == 2:
                out += h * h * (-c * ch - s * sh)
            else:
                raise ValueError("deriv must be 0, 1 or 2")
        return out[0] if scalar else out

    def to_dict(self):
        return {
            "offsets": self.offsets.tolist(),
            "cos_coeffs": self.cos_coeffs.tolist(),
            "sin_coeffs": self.sin_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["offsets"]), np.array(d["cos_coeffs"]), np.array(d["sin_coeffs"]))


def manual_gait(kind, amplitude=1.0):
    """One of the three hand-picked two-paddle gaits (shape dimension 2).

    Paddle rest angles are +pi/2 and -pi/2 (a quarter turn away from the body
    axis).  ``twist`` oscillates both paddle angles in phase, ``flap`` in
    anti-phase (the bilaterally symmetric stroke), and ``circle`` delays the
    second paddle by a quarter cycle so the shape-space locus is a circle.
    """
    a = float(amplitude)
    offsets = np.array([np.pi / 2, -np.pi / 2])
    if kind == "twist_in_place":
        cos = np.array([[0.0, 0.0]])
        sin = np.array([[a, a]])
    elif kind == "symmetric_flap":
        cos = np.array([[0.0, 0.0]])
        sin = np.array([[a, -a]])
    elif kind == "circle":
        cos = np.array([[0.0, -a]])
        sin = np.array([[a, 0.0]])
    else:
        raise ConfigError(f"unsupported manual gait kind: {kind!r}")
    return Gait(offsets, cos, sin)


def multiseg_flap_gait(segments_per_paddle, amplitude_total=np.pi):
    """Flapping gait for paddles of N segments each (shape dimension 2N).

    Every joint of a paddle oscillates with equal amplitude
    ``amplitude_total / N`` so the joint angles sum to a sinusoid of amplitude
    ``amplitude_total``; the two paddles move mirror-symmetrically.  Rest
    configuration: base joints at +-pi/2, inner joints straight.
    """
    n_seg = int(segments_per_paddle)
    if n_seg < 1:
        raise ConfigError("segments_per_paddle must be >= 1")
    amp = float(amplitude_total) / n_seg
    dim = 2 * n_seg
    offsets = np.zeros(dim)
    offsets[0] = np.pi / 2
    offsets[n_seg] = -np.pi / 2
    sin = np.zeros((1, dim))
    sin[0, :n_seg] = amp
    sin[0, n_seg:] = -amp
    return Gait(offsets, np.zeros((1, dim)), sin)


@dataclass(frozen=True)
class NoiseParams:
    """Scales of the shape-signal perturbations; all zero gives the exact gait."""

    phase_noise_std: float = 0.01            # diffusion scale, rad / sqrt(time)
    amplitude_noise_std: float = 0.02        # stationary std per coordinate, rad
    filter_corner: float = 10.0 / PERIOD     # low-pass corner rate, 1 / time
    seed: int = 0

    def __post_init__(self):
        if self.phase_noise_std < 0 or self.amplitude_noise_std < 0:
            raise ConfigError("noise standard deviations must be >= 0")
        if self.filter_corner <= 0:
            raise ConfigError("filter_corner must be > 0")


@dataclass
class ShapeSeries:
    """Uniformly sampled shape trajectory (angles and two time derivatives)."""

    t: np.ndarray            # (m,)
    alpha: np.ndarray        # (m, dim)
    alpha_dot: np.ndarray    # (m, dim)
    alpha_ddot: np.ndarray   # (m, dim)
    phi_true: np.ndarray | None = field(default=None)

    @property
    def dim(self):
        return self.alpha.shape[1]

    def __len__(self):
        return self.t.shape[0]


class GaitSignal:
    """Deterministic shape signal following a gait exactly: phi = phase0 + t."""

    def __init__(self, gait, phase0=0.0):
        self.gait = gait
        self.phase0 = float(phase0)
        self.dim = gait.dim

    def true_phase(self, times):
        return self.phase0 + np.asarray(times, dtype=float)

    def sample(self, times):
        phi = self.true_phase(times)
        return (self.gait.evaluate(phi, 0),
                self.gait.evaluate(phi, 1),
                self.gait.evaluate(phi, 2))


def _filter_step_matrices(omega, h):
    """Exact one-step transition of the critically damped filter under held input."""
    e = np.exp(-omega * h)
    A = np.array([
        [e * (1.0 + omega * h), e * h],
        [-e * omega * omega * h, e * (1.0 - omega * h)],
    ])
    b = np.array([1.0 - A[0, 0], -A[1, 0]])
    return A, b


def _stationary_cov(A, b):
    """Solve P = A P A^T + b b^T for the 2x2 stationary covariance."""
    k = np.kron(A, A)
    rhs = np.outer(b, b).ravel()
    p = np.linalg.solve(np.eye(4) - k, rhs)
    return p.reshape(2, 2)


class _FilteredProcess:
    """Critically damped 2nd-order low-pass response to a held input sequence.

    Node states are propagated with the exact discrete transition; in between
    nodes the closed-form interval solution gives (value, rate, accel) at any
    time, so evaluation is grid-independent.
    """

    def __init__(self, omega, node_dt, inputs, state0):
        self.omega = float(omega)
        self.h = float(node_dt)
        self.u = np.atleast_2d(np.asarray(inputs, dtype=float).T).T  # (J, width)
        J, width = self.u.shape
        A, b = _filter_step_matrices(self.omega, self.h)
        z = np.empty((J, width))
        zd = np.empty((J, width))
        z[0], zd[0] = state0
        for j in range(J - 1):
            z[j + 1] = A[0, 0] * z[j] + A[0, 1] * zd[j] + b[0] * self.u[j]
            zd[j + 1] = A[1, 0] * z[j] + A[1, 1] * zd[j] + b[1] * self.u[j]
        self.z, self.zd = z, zd

    def eval(self, times):
        t = np.asarray(times, dtype=float)
        j = np.clip((t / self.h).astype(np.int64), 0, self.u.shape[0] - 2)
        tau = (t - j * self.h)[:, None]
        w = self.omega
        u = self.u[j]
        y0 = self.z[j] - u
        c2 = self.zd[j] + w * y0
        decay = np.exp(-w * tau)
        val = u + decay * (y0 + c2 * tau)
        rate = decay * (self.zd[j] - w * c2 * tau)
        accel = -2.0 * w * rate - w * w * (val - u)
        return val, rate, accel


class NoisyShapeSignal:
    """Gait plus filtered phase and amplitude noise, evaluable at any time."""

    def __init__(self, gait, noise, n_cycles):
        if n_cycles < 1:
            raise ConfigError("n_cycles must be >= 1")
        self.gait = gait
        self.noise = noise
        self.dim = gait.dim
        self.t_end = n_cycles * PERIOD
        omega = noise.filter_corner
        h = min(PERIOD / 64.0, 0.125 / omega)
        n_nodes = int(np.ceil(self.t_end / h)) + 2

        rng = np.random.default_rng(np.random.SeedSequence(noise.seed))
        self.phase0 = rng.uniform(0.0, 2.0 * np.pi)

        # phase perturbation: low-passed Euler-Maruyama walk
        walk = np.concatenate([
            [0.0], np.cumsum(noise.phase_noise_std * np.sqrt(h) * rng.standard_normal(n_nodes - 1)),
        ])
        self._phase_proc = _FilteredProcess(omega, h, walk[:, None], (np.zeros(1), np.zeros(1)))

        # amplitude perturbation: held white noise calibrated to the target
        # stationary std, initial state drawn from the stationary law
        A, b = _filter_step_matrices(omega, h)
        p_unit = _stationary_cov(A, b)
        if noise.amplitude_noise_std > 0:
            sigma_u = noise.amplitude_noise_std / np.sqrt(p_unit[0, 0])
        else:
            sigma_u = 0.0
        u_amp = sigma_u * rng.standard_normal((n_nodes, self.dim))
        chol = np.linalg.cholesky(p_unit + 1e-300 * np.eye(2)) * sigma_u
        init = chol @ rng.standard_normal((2, self.dim))
        self._amp_proc = _FilteredProcess(omega, h, u_amp, (init[0], init[1]))

    def true_phase(self, times):
        t = np.asarray(times, dtype=float)
        eta, _, _ = self._phase_proc.eval(t)
        return self.phase0 + t + eta[:, 0]

    def sample(self, times):
        t = np.atleast_1d(np.asarray(times, dtype=float))
        eta, eta_d, eta_dd = self._phase_proc.eval(t)
        phi = self.phase0 + t + eta[:, 0]
        phi_d = (1.0 + eta_d[:, 0])[:, None]
        phi_dd = eta_dd[:, 0][:, None]
        a, a_d, a_dd = self._amp_proc.eval(t)
        g0 = self.gait.evaluate(phi, 0)
        g1 = self.gait.evaluate(phi, 1)
        g2 = self.gait.evaluate(phi, 2)
        alpha = g0 + a
        alpha_dot = g1 * phi_d + a_d
        alpha_ddot = g2 * phi_d ** 2 + g1 * phi_dd + a_dd
        return alpha, alpha_dot, alpha_ddot


def noisy_shape_signal(gait, noise, n_cycles, dt):
    """Sample a noisy gait signal on a uniform grid; deterministic per seed."""
    if dt <= 0:
        raise ConfigError("dt must be > 0")
    sig = NoisyShapeSignal(gait, noise, n_cycles)
    t = np.arange(int(np.floor(sig.t_end / dt)) + 1) * dt
    alpha, alpha_dot, alpha_ddot = sig.sample(t)
    return ShapeSeries(t, alpha, alpha_dot, alpha_ddot, phi_true=sig.true_phase(t))
