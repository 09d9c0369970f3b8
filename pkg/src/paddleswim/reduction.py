"""Locked tensors, connections, and first-order slow-manifold corrections.

The module works on SE(2)-symmetric dissipative systems described by two
shape-dependent symmetric bilinear forms on (body velocity, shape velocity):
the kinetic-energy form (scaled by the inertial parameter m) and the Rayleigh
dissipation form (scaled by the damping parameter c).  From these it derives

* the locked inertia and damping tensors (group-direction blocks),
* the local mechanical and viscous connections, and
* the fields B(r) and G(r) of the first-order reduced model

      xi = -A_visc(r) rdot + eps B(r) rddot + eps G(r)(rdot, rdot) + O(eps^2),

  which describe the dynamics on the attracting slow manifold for small
  inertia-damping ratio eps = m / c.

With H(r) := Ibar_loc (A_mech - A_visc) the fields are

      B(r) = Vbar_loc^{-1} H(r),
      G(r)(u, w) = Vbar_loc^{-1} [ ad*_{A_visc u}(H w) + (d_u H) w ],

where d_u H differentiates H along shape direction u (central differences).
The (1,2) tensor G is not symmetric in general; the stored convention is
G[k, a, b] u^a w^b with slot a feeding the ad* subscript and the derivative
direction, slot b feeding H.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import se2, swimmer as _swimmer
from .errors import ConfigError, NumericalError

FD_STEP = 1e-5  # central-difference step for shape derivatives, radians

__all__ = [
    "ReducedSystem", "CorrectionFields", "CorrectionSample",
    "swimmer_reduced_system", "locked_tensors", "connections",
    "correction_fields", "predict_body_velocity", "momentum_residual",
    "dump_fields_csv",
]


@dataclass(frozen=True)
class ReducedSystem:
    """SE(2)-symmetric system given by shape-dependent bilinear forms.

    ``kinetic_form(r)`` returns the m-scaled kinetic form and
    ``dissipation_form(r)`` the c-scaled Rayleigh form, both symmetric of
    shape (3 + shape_dim, 3 + shape_dim) with the body-velocity block first.
    ``m`` and ``c`` are the scales baked into those forms, kept so the barred
    (scale-free) tensors can be recovered.
    """

    shape_dim: int
    kinetic_form: Callable[[np.ndarray], np.ndarray]
    dissipation_form: Callable[[np.ndarray], np.ndarray]
    m: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.shape_dim < 1:
            raise ConfigError("shape_dim must be >= 1")
        if self.m <= 0 or self.c <= 0:
            raise ConfigError("scales m and c must be > 0")


def swimmer_reduced_system(params):
    """Bilinear-form description of the paddle swimmer.

    The kinetic form uses a unit reference mass when params.epsilon = 0 so
    the barred tensors (and hence the correction fields, which do not depend
    on m) remain defined in the Stokes limit.
    """
    dim = params.n
    m_ref = params.m if params.m > 0 else 1.0
    ibar = np.diag([1.0, 1.0, params.Ibar])
    c_seg, c_L = _swimmer.drag_matrices(params)

    def kinetic(r):
        k = np.zeros((3 + dim, 3 + dim))
        k[:3, :3] = m_ref * ibar
        return k

    def dissipation(r):
        D = np.zeros((3 + dim, 3 + dim))
        D[:3, :3] = c_L
        for i in range(1, dim + 1):
            V_i, _ = _swimmer.link_maps(params, r, i)
            D += V_i.T @ c_seg @ V_i
        return D

    return ReducedSystem(dim, kinetic, dissipation, m=m_ref, c=params.c)


def locked_tensors(sys, r):
    """Group-direction blocks: the locked inertia and damping tensors.

    I_loc is the body-velocity block of the kinetic form; V_loc is minus the
    body-velocity block of the Rayleigh form (drag opposes motion).  I_loc
    must be positive definite and V_loc negative definite.
    """
    r = np.asarray(r, dtype=float)
    I_loc = np.asarray(sys.kinetic_form(r))[:3, :3]
    V_loc = -np.asarray(sys.dissipation_form(r))[:3, :3]
    I_loc = 0.5 * (I_loc + I_loc.T)
    V_loc = 0.5 * (V_loc + V_loc.T)
    if np.min(np.linalg.eigvalsh(I_loc)) <= 0:
        raise ConfigError("locked inertia tensor is not positive definite")
    if np.max(np.linalg.eigvalsh(V_loc)) >= 0:
        raise ConfigError("locked damping tensor is not negative definite")
    return I_loc, V_loc


def connections(sys, r):
    """Local mechanical and viscous connections (A_mech, A_visc) at shape r.

    Signs are fixed so the Stokes-limit model reads xi = -A_visc rdot and the
    locked velocity is xi + A_mech rdot.
    """
    r = np.asarray(r, dtype=float)
    I_loc, V_loc = locked_tensors(sys, r)
    k = np.asarray(sys.kinetic_form(r))
    D = np.asarray(sys.dissipation_form(r))
    A_mech = np.linalg.solve(I_loc, k[:3, 3:])
    A_visc = np.linalg.solve(V_loc, -D[:3, 3:])
    return A_mech, A_visc


def _h_matrix(sys, r):
    """Ibar_loc (A_mech - A_visc): the rdot-coefficient of the slow-manifold
    momentum graph, with the inertial scale divided out."""
    I_loc, _ = locked_tensors(sys, r)
    A_mech, A_visc = connections(sys, r)
    return (I_loc / sys.m) @ (A_mech - A_visc)


@dataclass(frozen=True)
class CorrectionSample:
    """All reduction fields evaluated at one shape point."""

    r: np.ndarray
    A_mech: np.ndarray
    A_visc: np.ndarray
    Ibar_loc: np.ndarray
    Vbar_loc: np.ndarray
    B: np.ndarray
    G: np.ndarray            # (3, dim, dim), G[k, a, b]


@dataclass(frozen=True)
class CorrectionFields:
    """Shape-to-field callables bundling the reduced model of a system."""

    sys: ReducedSystem = field(repr=False)

    @property
    def shape_dim(self):
        return self.sys.shape_dim

    def A_mech(self, r):
        return connections(self.sys, r)[0]

    def A_visc(self, r):
        return connections(self.sys, r)[1]

    def Ibar_loc(self, r):
        return locked_tensors(self.sys, r)[0] / self.sys.m

    def Vbar_loc(self, r):
        return locked_tensors(self.sys, r)[1] / self.sys.c

    def B(self, r):
        return np.linalg.solve(self.Vbar_loc(r), _h_matrix(self.sys, r))

    def G(self, r):
        return self.at(r).G

    def at(self, r):
        """Evaluate every field at r, with the stability spectrum checked."""
        sys = self.sys
        r = np.asarray(r, dtype=float)
        I_loc, V_loc = locked_tensors(sys, r)
        ibar = I_loc / sys.m
        vbar = V_loc / sys.c
        ev = np.linalg.eigvals(np.linalg.solve(ibar, vbar))
        if np.max(ev.real) >= 0:
            raise NumericalError(
                "fast dynamics not contracting: eig(Ibar_loc^-1 Vbar_loc) "
                f"reaches Re={np.max(ev.real):g} at r={r}")
        A_mech, A_visc = connections(sys, r)
        H = ibar @ (A_mech - A_visc)
        B = np.linalg.solve(vbar, H)

        dim = sys.shape_dim
        G = np.empty((3, dim, dim))
        for a in range(dim):
            dr = np.zeros(dim)
            dr[a] = FD_STEP
            dH_a = (_h_matrix(sys, r + dr) - _h_matrix(sys, r - dr)) / (2.0 * FD_STEP)
            for b in range(dim):
                vec = se2.ad_star_matrix(H[:, b]) @ A_visc[:, a] + dH_a[:, b]
                G[:, a, b] = np.linalg.solve(vbar, vec)
        return CorrectionSample(r, A_mech, A_visc, ibar, vbar, B, G)


def correction_fields(sys):
    """Bundle the analytic reduced-model fields of a system."""
    return CorrectionFields(sys)


def predict_body_velocity(fields, epsilon, r, rdot, rddot):
    """First-order slow-manifold body velocity at (r, rdot, rddot).

    ``fields`` may be a :class:`CorrectionFields` bundle or a sample already
    evaluated at r.  epsilon = 0 reduces exactly to the Stokes-limit model.
    """
    if isinstance(fields, CorrectionFields):
        sample = fields.at(r)
    else:
        sample = fields
    rdot = np.asarray(rdot, dtype=float)
    rddot = np.asarray(rddot, dtype=float)
    xi = -sample.A_visc @ rdot
    if epsilon != 0.0:
        xi = xi + epsilon * (sample.B @ rddot + np.einsum("kab,a,b->k", sample.G, rdot, rdot))
    return xi


def momentum_residual(traj, sys):
    """Per-sample norm of (d/dt spatial momentum - drag pairing) along a trajectory.

    The spatial momentum J = Ad*_{g^-1} p should change exactly at the rate
    of the drag force paired with the group generators; the centered
    finite difference of J is compared against that assembled value at every
    interior sample.  Returns (residual_norms, drag_norms), both of length
    len(traj) - 2.
    """
    if len(traj) < 3:
        raise ConfigError("momentum residual needs at least 3 samples")
    dt = traj.dt
    m = len(traj)
    J = np.empty((m, 3))
    K = np.empty((m, 3))
    for k in range(m):
        g_inv = se2.inverse(traj.g[k])
        J[k] = se2.Ad_star(g_inv, traj.p[k])
        D = np.asarray(sys.dissipation_form(traj.alpha[k]))
        K_body = -(D[:3, :3] @ traj.xi[k] + D[:3, 3:] @ traj.alpha_dot[k])
        K[k] = se2.Ad_star(g_inv, K_body)
    J_dot = (J[2:] - J[:-2]) / (2.0 * dt)
    resid = np.linalg.norm(J_dot - K[1:-1], axis=1)
    return resid, np.linalg.norm(K[1:-1], axis=1)


def dump_fields_csv(fields, gait, path, num=128):
    """Write (phi, r, A_visc, B, G) samples along a gait for inspection."""
    dim = fields.shape_dim
    header = ["phi"]
    header += [f"r_{j}" for j in range(1, dim + 1)]
    header += [f"A_visc_{k}{j}" for k in "xyt" for j in range(1, dim + 1)]
    header += [f"B_{k}{j}" for k in "xyt" for j in range(1, dim + 1)]
    header += [f"G_{k}{a}{b}" for k in "xyt"
               for a in range(1, dim + 1) for b in range(1, dim + 1)]
    phis = np.linspace(0.0, 2.0 * np.pi, num, endpoint=False)
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for phi in phis:
            r = gait.evaluate(phi)
            s = fields.at(r)
            row = np.concatenate([[phi], r, s.A_visc.ravel(), s.B.ravel(), s.G.ravel()])
            fh.write(",".join("%.17g" % v for v in row) + "\n")
