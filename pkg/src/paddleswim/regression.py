"""Phase-sectioned least squares for local models of gait dynamics.

Samples are grouped into M evenly spaced phase sections.  Within section m,
anchored at the gait point gamma_m = gamma(phi_m), each sample contributes
offsets

    delta = r - gamma_m,  delta_dot = rdot - dgamma_m,  delta_ddot = rddot - ddgamma_m

and its measured body velocity as the regression target.  Two regressor
families are supported, named by which dynamics they can represent:

* ``stokes``: rows [1, delta, delta_dot, delta (x) delta_dot], able to express
  a shape-dependent linear map from shape velocity to body velocity;
* ``perturbed_stokes``: the rows above extended with delta_ddot,
  delta (x) delta_ddot and delta_dot (x) delta_dot (optionally the cubic
  delta (x) delta_dot (x) delta_dot), able to express the first-order
  inertial correction as well.

Outer products are flattened row-major: column (a, b) of a block delta (x) v
holds delta[a] * v[b] at flat index a * d + b.  The flattening is a basis
choice; building and predicting with the same layout is the contract.

One ridge-regularized solve is done per section and body component; the
resulting coefficient blocks are interpolated over phase by Fourier series so
the model can be evaluated anywhere on the cycle.
"""

import json
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegenerateDataError
from .phase import FourierModel, fit_fourier

STOKES = "stokes"
PERTURBED_STOKES = "perturbed_stokes"

COMPONENTS = ("x", "y", "theta")

__all__ = [
    "STOKES", "PERTURBED_STOKES", "COMPONENTS",
    "RegressorConfig", "PhasedData", "SectionSamples", "LocalModel",
    "section_phases", "collect_samples", "build_design_matrix",
    "fit_local_model", "column_count",
]


@dataclass(frozen=True)
class RegressorConfig:
    """Sectioning, regularization and interpolation choices for one fit."""

    kind: str = STOKES
    M: int = 32
    kappa: float = np.inf
    ridge: float = 1e-8
    coeff_fourier_order: int = 5
    include_cubic: bool = False

    def __post_init__(self):
        if self.kind not in (STOKES, PERTURBED_STOKES):
            raise ConfigError(f"unknown regressor kind: {self.kind!r}")
        if self.M < 8:
            raise ConfigError("M must be >= 8")
        if self.ridge < 0:
            raise ConfigError("ridge must be >= 0")
        if self.kappa <= 0:
            raise ConfigError("kappa must be > 0 (use inf for bin-only gating)")


def column_count(kind, dim, include_cubic=False):
    if kind == STOKES:
        return 1 + 2 * dim + dim * dim
    n = 1 + 3 * dim + 3 * dim * dim
    if include_cubic:
        n += dim ** 3
    return n


def section_phases(M):
    return 2.0 * np.pi * np.arange(M) / M


@dataclass
class PhasedData:
    """Trajectory samples with an assigned phase; the unit of fitting data."""

    phi: np.ndarray          # (N,) unwrapped or wrapped phase
    alpha: np.ndarray        # (N, d)
    alpha_dot: np.ndarray
    alpha_ddot: np.ndarray
    xi: np.ndarray           # (N, 3)

    @classmethod
    def from_trajectory(cls, traj, phases):
        phi = phases.phi_unwrapped if hasattr(phases, "phi_unwrapped") else np.asarray(phases)
        return cls(phi, traj.alpha, traj.alpha_dot, traj.alpha_ddot, traj.xi)

    @property
    def dim(self):
        return self.alpha.shape[1]

    def __len__(self):
        return self.phi.shape[0]


@dataclass
class SectionSamples:
    """Offsets and targets of the samples falling in one phase section."""

    m: int
    phi_m: float
    delta: np.ndarray        # (N_m, d)
    delta_dot: np.ndarray
    delta_ddot: np.ndarray
    xi: np.ndarray           # (N_m, 3)

    def __len__(self):
        return self.delta.shape[0]


def _offsets(data, gait_models, phi_anchor):
    gait_m, dgait_m, ddgait_m = gait_models
    delta = data.alpha - gait_m.evaluate(phi_anchor)
    delta_dot = data.alpha_dot - dgait_m.evaluate(phi_anchor)
    delta_ddot = data.alpha_ddot - ddgait_m.evaluate(phi_anchor)
    return delta, delta_dot, delta_ddot


def collect_samples(data, gait_models, m, cfg):
    """Samples of one phase section, offset against the section anchor.

    Section m covers phases within pi/M of phi_m = 2 pi m / M; samples whose
    offset norms reach kappa are dropped.  An empty section is legal (the
    fit defers to interpolation) and reported by the zero-length result.
    """
    M = cfg.M
    phi_m = 2.0 * np.pi * m / M
    dphi = np.mod(data.phi - phi_m + np.pi, 2.0 * np.pi) - np.pi
    mask = np.abs(dphi) <= np.pi / M
    sub = PhasedData(data.phi[mask], data.alpha[mask], data.alpha_dot[mask],
                     data.alpha_ddot[mask], data.xi[mask])
    delta, delta_dot, delta_ddot = _offsets(sub, gait_models, phi_m)
    if np.isfinite(cfg.kappa):
        keep = ((np.linalg.norm(delta, axis=1) < cfg.kappa)
                & (np.linalg.norm(delta_dot, axis=1) < cfg.kappa)
                & (np.linalg.norm(delta_ddot, axis=1) < cfg.kappa))
        delta, delta_dot, delta_ddot = delta[keep], delta_dot[keep], delta_ddot[keep]
        xi = sub.xi[keep]
    else:
        xi = sub.xi
    return SectionSamples(m, phi_m, delta, delta_dot, delta_ddot, xi)


def build_design_matrix(delta, delta_dot, delta_ddot, kind, include_cubic=False):
    """Regressor rows for a batch of offsets; layout as documented above."""
    delta = np.atleast_2d(np.asarray(delta, dtype=float))
    delta_dot = np.atleast_2d(np.asarray(delta_dot, dtype=float))
    delta_ddot = np.atleast_2d(np.asarray(delta_ddot, dtype=float))
    N, d = delta.shape
    cols = [np.ones((N, 1)), delta, delta_dot]
    outer_dd = (delta[:, :, None] * delta_dot[:, None, :]).reshape(N, d * d)
    if kind == STOKES:
        cols.append(outer_dd)
    elif kind == PERTURBED_STOKES:
        cols.append(delta_ddot)
        cols.append(outer_dd)
        cols.append((delta[:, :, None] * delta_ddot[:, None, :]).reshape(N, d * d))
        cols.append((delta_dot[:, :, None] * delta_dot[:, None, :]).reshape(N, d * d))
        if include_cubic:
            cube = (delta[:, :, None, None] * delta_dot[:, None, :, None]
                    * delta_dot[:, None, None, :]).reshape(N, d ** 3)
            cols.append(cube)
    else:
        raise ConfigError(f"unknown regressor kind: {kind!r}")
    return np.hstack(cols)


def _ridge_lstsq(X, Y, ridge):
    """Least squares with a column-scale-normalized ridge penalty.

    Returns (coefficients, condition number of the scaled design).  With
    ridge = 0 this is a plain pseudoinverse solve, exact on consistent
    full-rank problems.
    """
    norms = np.sqrt(np.mean(X * X, axis=0))
    norms[norms == 0] = 1.0
    Xn = X / norms
    s = np.linalg.svd(Xn, compute_uv=False)
    cond = s[0] / s[-1] if s[-1] > 0 else np.inf
    if ridge == 0:
        coef, *_ = np.linalg.lstsq(Xn, Y, rcond=None)
    else:
        k = Xn.shape[1]
        Xa = np.vstack([Xn, np.sqrt(ridge) * np.eye(k)])
        Ya = np.vstack([Y, np.zeros((k, Y.shape[1]))])
        coef, *_ = np.linalg.lstsq(Xa, Ya, rcond=None)
    return coef / norms[:, None], cond


@dataclass
class LocalModel:
    """Per-phase regression coefficients with Fourier interpolants.

    ``coeffs[m, k, :]`` are the regressor weights of body component k in
    section m (NaN rows mark sections that had no samples); ``interp``
    carries one Fourier series per (component, column) entry so coefficients
    can be evaluated at any phase.  The gait models used to form offsets are
    part of the model: predictions for raw states go through them.
    """

    kind: str
    dim: int
    M: int
    coeffs: np.ndarray                 # (M, 3, cols)
    interp: FourierModel               # width = 3 * cols
    gait_models: tuple                 # (gamma, dgamma, ddgamma) FourierModels
    kappa: float = np.inf
    include_cubic: bool = False
    counts: np.ndarray | None = field(default=None, repr=False)
    cond: np.ndarray | None = field(default=None, repr=False)
    resid_rms: np.ndarray | None = field(default=None, repr=False)
    tube_radius: float = np.nan

    @property
    def cols(self):
        return self.coeffs.shape[2]

    @property
    def section_phases(self):
        return section_phases(self.M)

    def _block_slices(self):
        d = self.dim
        names = ["const", "delta", "delta_dot"]
        sizes = [1, d, d]
        if self.kind == PERTURBED_STOKES:
            names += ["delta_ddot", "delta_x_delta_dot", "delta_x_delta_ddot",
                      "delta_dot_x_delta_dot"]
            sizes += [d, d * d, d * d, d * d]
            if self.include_cubic:
                names.append("delta_x_delta_dot_x_delta_dot")
                sizes.append(d ** 3)
        else:
            names.append("delta_x_delta_dot")
            sizes.append(d * d)
        out, at = {}, 0
        for name, size in zip(names, sizes):
            out[name] = slice(at, at + size)
            at += size
        return out

    def block(self, name, phi=None):
        """One coefficient block, per-section (phi=None) or interpolated."""
        sl = self._block_slices()[name]
        if phi is None:
            return self.coeffs[:, :, sl]
        return self.coeff_at(phi)[..., sl]

    def coeff_at(self, phi):
        """Interpolated coefficient array at phase phi: (..., 3, cols)."""
        phi = np.asarray(phi, dtype=float)
        flat = self.interp.evaluate(phi)
        return flat.reshape(phi.shape + (3, self.cols))

    def predict(self, phi, delta, delta_dot, delta_ddot=None):
        """Body velocity from interpolated coefficients and given offsets.

        Scalar phi with single offsets or arrays of each; the stokes kind
        ignores ``delta_ddot``.  Offsets beyond kappa only warn: the model
        extrapolates, it does not refuse.
        """
        phi = np.asarray(phi, dtype=float)
        scalar = phi.ndim == 0
        phi = np.atleast_1d(phi)
        delta = np.atleast_2d(np.asarray(delta, dtype=float))
        delta_dot = np.atleast_2d(np.asarray(delta_dot, dtype=float))
        if delta_ddot is None:
            delta_ddot = np.zeros_like(delta)
        else:
            delta_ddot = np.atleast_2d(np.asarray(delta_ddot, dtype=float))
        if not (np.all(np.isfinite(delta)) and np.all(np.isfinite(delta_dot))
                and np.all(np.isfinite(delta_ddot)) and np.all(np.isfinite(phi))):
            raise ConfigError("non-finite prediction inputs")
        if np.isfinite(self.kappa):
            worst = max(np.linalg.norm(delta, axis=1).max(initial=0.0),
                        np.linalg.norm(delta_dot, axis=1).max(initial=0.0),
                        np.linalg.norm(delta_ddot, axis=1).max(initial=0.0))
            if worst > self.kappa:
                warnings.warn(f"offsets reach {worst:.3g}, outside the kappa tube "
                              f"({self.kappa:.3g})", stacklevel=2)
        X = build_design_matrix(delta, delta_dot, delta_ddot, self.kind, self.include_cubic)
        C = self.coeff_at(phi)
        out = np.einsum("nkc,nc->nk", C, X)
        return out[0] if scalar else out

    def predict_states(self, phi, alpha, alpha_dot, alpha_ddot):
        """Predict from raw states; offsets are taken against the model's own
        gait models at each sample's phase."""
        gait_m, dgait_m, ddgait_m = self.gait_models
        delta = alpha - gait_m.evaluate(phi)
        delta_dot = alpha_dot - dgait_m.evaluate(phi)
        delta_ddot = alpha_ddot - ddgait_m.evaluate(phi)
        return self.predict(phi, delta, delta_dot, delta_ddot)

    def constraint_mismatch(self):
        """Per-section gap between the constant term and C1 . dgamma(phi_m).

        The expansion behind the regressors implies the constant coefficient
        equals the delta_dot block contracted with the gait velocity, but the
        regression does not enforce this; the observed mismatch is reported,
        never asserted away.
        """
        dgait = self.gait_models[1]
        c0 = self.block("const")[:, :, 0]
        c1 = self.block("delta_dot")
        dg = dgait.evaluate(self.section_phases)
        return c0 - np.einsum("mkj,mj->mk", c1, dg)

    def to_dict(self):
        coeffs = [[[None if not np.isfinite(v) else float(v) for v in row]
                   for row in sec] for sec in self.coeffs]
        return {
            "kind": self.kind,
            "dim": self.dim,
            "M": self.M,
            "include_cubic": self.include_cubic,
            "kappa": self.kappa if np.isfinite(self.kappa) else "inf",
            "section_phases": self.section_phases.tolist(),
            "coeffs": coeffs,
            "interp": self.interp.to_dict(),
            "gait_models": [m.to_dict() for m in self.gait_models],
            "counts": None if self.counts is None else self.counts.tolist(),
            "cond": None if self.cond is None else self.cond.tolist(),
            "resid_rms": None if self.resid_rms is None else self.resid_rms.tolist(),
            "tube_radius": self.tube_radius,
        }

    @classmethod
    def from_dict(cls, d):
        coeffs = np.array([[[np.nan if v is None else v for v in row]
                            for row in sec] for sec in d["coeffs"]], dtype=float)
        return cls(
            kind=d["kind"], dim=d["dim"], M=d["M"], coeffs=coeffs,
            interp=FourierModel.from_dict(d["interp"]),
            gait_models=tuple(FourierModel.from_dict(x) for x in d["gait_models"]),
            kappa=np.inf if d["kappa"] == "inf" else float(d["kappa"]),
            include_cubic=d["include_cubic"],
            counts=None if d["counts"] is None else np.array(d["counts"]),
            cond=None if d["cond"] is None else np.array(d["cond"]),
            resid_rms=None if d["resid_rms"] is None else np.array(d["resid_rms"]),
            tube_radius=d.get("tube_radius", np.nan),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def fit_local_model(datasets, gait_models, cfg):
    """Fit a local model from one or more phased datasets.

    Each section gets an independent ridge least squares per body component;
    coefficients are then Fourier-interpolated over the section phases.
    Sections without samples are skipped and filled by the interpolant.
    """
    if isinstance(datasets, PhasedData):
        datasets = [datasets]
    if not datasets:
        raise ConfigError("no datasets to fit")
    dim = datasets[0].dim
    cols = column_count(cfg.kind, dim, cfg.include_cubic)
    M = cfg.M

    coeffs = np.full((M, 3, cols), np.nan)
    counts = np.zeros(M, dtype=int)
    cond = np.full(M, np.nan)
    resid_rms = np.full((M, 3), np.nan)
    tube = 0.0

    for m in range(M):
        parts = [collect_samples(data, gait_models, m, cfg) for data in datasets]
        delta = np.vstack([p.delta for p in parts])
        delta_dot = np.vstack([p.delta_dot for p in parts])
        delta_ddot = np.vstack([p.delta_ddot for p in parts])
        xi = np.vstack([p.xi for p in parts])
        counts[m] = delta.shape[0]
        if counts[m] == 0:
            continue
        if not np.all(np.isfinite(xi)):
            raise ConfigError(f"non-finite regression targets in section {m}")
        if counts[m] < 3 * cols:
            warnings.warn(f"section {m}: only {counts[m]} samples for {cols} columns",
                          stacklevel=2)
        for arr in (delta, delta_dot, delta_ddot):
            mx = np.linalg.norm(arr, axis=1).max(initial=0.0)
            tube = max(tube, mx)
        X = build_design_matrix(delta, delta_dot, delta_ddot, cfg.kind, cfg.include_cubic)
        beta, cond[m] = _ridge_lstsq(X, xi, cfg.ridge)
        coeffs[m] = beta.T
        resid_rms[m] = np.sqrt(np.mean((xi - X @ beta) ** 2, axis=0))
        if cond[m] > 1e8:
            warnings.warn(f"section {m}: design condition number {cond[m]:.3g}",
                          stacklevel=2)

    good = np.nonzero(counts > 0)[0]
    if good.size == 0:
        raise DegenerateDataError("every phase section is empty; nothing to fit")
    phis = section_phases(M)[good]
    flat = coeffs[good].reshape(good.size, 3 * cols)
    # order >= (sections)/2 interpolates the sections exactly (minimum-norm at
    # the Nyquist order); anything lower smooths
    order = min(cfg.coeff_fourier_order, good.size // 2)
    interp = fit_fourier(phis, flat, order, allow_deficient=2 * order + 1 > good.size)

    return LocalModel(
        kind=cfg.kind, dim=dim, M=M, coeffs=coeffs, interp=interp,
        gait_models=tuple(gait_models), kappa=cfg.kappa,
        include_cubic=cfg.include_cubic, counts=counts, cond=cond,
        resid_rms=resid_rms, tube_radius=tube,
    )
