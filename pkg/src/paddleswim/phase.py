"""Phase assignment for near-periodic shape data and Fourier-series models.

Phase is estimated in two stages: a protophase from the angle of the data
around its mean in the plane of the two leading principal components of the
stacked (shape, scaled shape velocity) samples, followed by a Fourier change
of variables that makes the time-averaged phase rate uniform (the empirical
protophase density, estimated to order 7, is flattened).  Any circle-valued
coordinate that increases along trajectories works for the downstream
regression; this one is cheap and deterministic.

The orientation of the protophase plane is fixed from the data itself: the
rotation direction predicted by the provided velocities/accelerations must be
positive.  A series whose sample order contradicts its own derivatives (for
example, a time-reversed record) therefore comes out non-monotone and is
flagged, not silently accepted.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDataError

RECTIFY_ORDER = 7

__all__ = ["FourierModel", "PhaseAssignment", "fit_fourier", "estimate_phase",
           "fit_gait_models"]


@dataclass(frozen=True)
class FourierModel:
    """Truncated real Fourier series of one or more 2*pi-periodic outputs."""

    mean: np.ndarray         # (width,)
    cos_coeffs: np.ndarray   # (order, width)
    sin_coeffs: np.ndarray   # (order, width)
    residual_rms: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "mean", np.atleast_1d(np.asarray(self.mean, dtype=float)))
        object.__setattr__(self, "cos_coeffs", np.atleast_2d(np.asarray(self.cos_coeffs, dtype=float)))
        object.__setattr__(self, "sin_coeffs", np.atleast_2d(np.asarray(self.sin_coeffs, dtype=float)))

    @property
    def order(self):
        return self.cos_coeffs.shape[0]

    @property
    def width(self):
        return self.mean.shape[0]

    def evaluate(self, phi):
        phi = np.asarray(phi, dtype=float)
        scalar = phi.ndim == 0
        phi = np.atleast_1d(phi)
        h = np.arange(1, self.order + 1)
        th = np.outer(phi, h)
        out = self.mean + np.cos(th) @ self.cos_coeffs + np.sin(th) @ self.sin_coeffs
        return out[0] if scalar else out

    def derivative(self):
        """Exact term-wise phase derivative as a new model."""
        h = np.arange(1, self.order + 1)[:, None]
        return FourierModel(np.zeros(self.width),
                            h * self.sin_coeffs,
                            -h * self.cos_coeffs)

    def to_dict(self):
        return {
            "order": self.order,
            "mean": self.mean.tolist(),
            "cos_coeffs": self.cos_coeffs.tolist(),
            "sin_coeffs": self.sin_coeffs.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(np.array(d["mean"]), np.array(d["cos_coeffs"]), np.array(d["sin_coeffs"]))

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_fourier(phi, values, order, allow_deficient=False):
    """Least-squares Fourier fit of (phase, value) samples.

    ``values`` may be (m,) or (m, width).  Requires at least 2*order + 1
    well-spread phases; a rank-deficient design (clustered phases) raises
    :class:`DegenerateDataError`.  ``allow_deficient`` accepts the one benign
    deficiency of exact trigonometric interpolation on an equispaced grid
    (the Nyquist sine column vanishes at the nodes) and takes the minimum
    norm solution.  Per-output RMS residuals are stored on the returned
    model.
    """
    phi = np.asarray(phi, dtype=float)
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    m = phi.shape[0]
    ncols = 2 * order + 1
    if m < ncols and not allow_deficient:
        raise DegenerateDataError(
            f"need at least {ncols} samples for a Fourier fit of order {order}, got {m}")
    h = np.arange(1, order + 1)
    th = np.outer(phi, h)
    X = np.empty((m, ncols))
    X[:, 0] = 1.0
    X[:, 1:order + 1] = np.cos(th)
    X[:, order + 1:] = np.sin(th)
    coef, _, rank, _ = np.linalg.lstsq(X, values, rcond=None)
    if rank < min(ncols, m) and not allow_deficient:
        raise DegenerateDataError(
            f"rank-deficient Fourier design (rank {rank} < {ncols}); phases too clustered")
    resid = values - X @ coef
    model = FourierModel(coef[0], coef[1:order + 1], coef[order + 1:],
                         residual_rms=np.sqrt(np.mean(resid ** 2, axis=0)))
    return model


@dataclass
class PhaseAssignment:
    """Per-sample unwrapped phase along a trajectory."""

    phi_unwrapped: np.ndarray
    monotone: bool
    nonmonotone_indices: np.ndarray

    @property
    def phi(self):
        """Phase values wrapped to [0, 2*pi)."""
        return np.mod(self.phi_unwrapped, 2.0 * np.pi)

    @property
    def winding(self):
        return int(np.floor((self.phi_unwrapped[-1] - self.phi_unwrapped[0]) / (2.0 * np.pi)))

    def __len__(self):
        return self.phi_unwrapped.shape[0]


def _rectify(psi, order=RECTIFY_ORDER):
    """Fourier change of variables flattening the empirical protophase density."""
    out = psi.astype(float).copy()
    for h in range(1, order + 1):
        c = np.mean(np.exp(-1j * h * psi))
        out += 2.0 * (c * (np.exp(1j * h * psi) - 1.0) / (1j * h)).real
    return out


def estimate_phase(series, rate_scale=1.0):
    """Assign a phase to every sample of a shape series.

    Needs at least three full cycles of near-periodic data.  The series must
    expose ``alpha``, ``alpha_dot`` and ``alpha_ddot`` arrays; velocities are
    divided by ``rate_scale`` (the nominal angular frequency) before the
    principal-component projection.
    """
    r = np.asarray(series.alpha, dtype=float)
    rd = np.asarray(series.alpha_dot, dtype=float) / rate_scale
    rdd = np.asarray(series.alpha_ddot, dtype=float) / rate_scale
    m = r.shape[0]
    if m < 8:
        raise DegenerateDataError("too few samples for phase estimation")

    Z = np.hstack([r, rd])
    Zdot = np.hstack([rd * rate_scale, rdd * rate_scale])
    Z = Z - Z.mean(axis=0)
    U, s, Vt = np.linalg.svd(Z, full_matrices=False)
    if s[1] <= 1e-10 * max(s[0], 1e-300):
        raise DegenerateDataError("shape data is degenerate (rank < 2); no rotation plane")
    u = Z @ Vt[0] / s[0]
    w = Z @ Vt[1] / s[1]
    ud = Zdot @ Vt[0] / s[0]
    wd = Zdot @ Vt[1] / s[1]

    # orient the plane so the rotation rate implied by the data's own
    # derivatives is positive
    rate = (u * wd - w * ud) / np.maximum(u * u + w * w, 1e-300)
    if np.median(rate) < 0:
        w, wd = -w, -wd

    psi = np.unwrap(np.arctan2(w, u))
    phi = _rectify(psi)
    dphi = np.diff(phi)
    bad = np.nonzero(dphi <= 0)[0]
    return PhaseAssignment(phi, monotone=bad.size == 0, nonmonotone_indices=bad)


def fit_gait_models(series, phases, order=7, independent_derivatives=False):
    """Fourier models of the gait and its two derivatives from phased data.

    By default the derivative models are exact term-wise derivatives of the
    position model (one source of truth).  With
    ``independent_derivatives=True`` the velocity and acceleration samples are
    fit separately; the results then need not be derivatives of one another.
    """
    phi = phases.phi_unwrapped if isinstance(phases, PhaseAssignment) else np.asarray(phases)
    gait_m = fit_fourier(phi, series.alpha, order)
    if independent_derivatives:
        dgait_m = fit_fourier(phi, series.alpha_dot, order)
        ddgait_m = fit_fourier(phi, series.alpha_ddot, order)
    else:
        dgait_m = gait_m.derivative()
        ddgait_m = dgait_m.derivative()
    return gait_m, dgait_m, ddgait_m
