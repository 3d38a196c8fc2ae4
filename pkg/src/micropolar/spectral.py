"""
Spectral infrastructure on the periodic square torus.

Provides the grid with its enumerated Laplacian eigenvalues, zero-mean
Hermitian-symmetric scalar and vector fields, forward/inverse transforms,
differential operators (Laplacian, rot, Leray projection), Galerkin
projectors onto low/high eigenvalue modes, the advective trilinear forms,
spectral norms, and nodal sampling/interpolation for point observations.

Coefficient convention: a real field is represented by the full complex
spectrum ``c[k1, k2]`` (numpy FFT layout) of

    f(x) = sum_k c_k exp(2*pi*i k.x / L),

so Parseval reads ``int_Q f^2 dx = L^2 * sum_k |c_k|^2``.  The mean mode
``c_0`` is identically zero and ``c_{-k} = conj(c_k)`` always holds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "FieldError",
    "Grid",
    "ScalarField",
    "VectorField",
    "make_grid",
    "transform_to_physical",
    "transform_to_spectral",
    "leray_project",
    "apply_A",
    "apply_A_inverse",
    "apply_A1",
    "apply_A1_inverse",
    "rot_vec",
    "rot_scalar",
    "galerkin_P",
    "galerkin_Q",
    "mode_mask",
    "trilinear_b",
    "trilinear_b1",
    "norm",
    "inner",
    "NodeSet",
    "make_node_set",
    "nodal_sample",
    "nodal_values_max",
    "nodal_interpolant",
]

HERMITIAN_RTOL = 1e-8


class FieldError(ValueError):
    """Raised when a field violates its structural invariants."""


@dataclass(frozen=True)
class Grid:
    """
    Periodic square grid with precomputed spectral bookkeeping.

    Parameters
    ----------
    n : int
        Points per side; must be even and at least 8.
    L : float
        Period length of the square domain Q = (0, L)^2.

    Notes
    -----
    The Laplacian eigenvalues lambda(k) = (2*pi/L)^2 |k|^2 over all
    nonzero integer wavevectors representable on the grid are enumerated
    in ``eigenvalues`` sorted ascending, ties broken by lexicographic
    (k1, k2) order.  ``mode_rank[i, j]`` gives the position of grid slot
    (i, j) in that enumeration (the zero mode gets a sentinel rank equal
    to the table length).
    """

    n: int
    L: float

    def __post_init__(self) -> None:
        if self.n < 8 or self.n % 2 != 0:
            raise ValueError(f"grid size must be even and >= 8, got n={self.n}")
        if not self.L > 0:
            raise ValueError(f"period length must be positive, got L={self.L}")

        n = self.n
        kax = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
        K1, K2 = np.meshgrid(kax, kax, indexing="ij")
        ksq = K1 * K1 + K2 * K2
        factor = (2.0 * np.pi / self.L) ** 2
        lam = factor * ksq.astype(np.float64)

        kcut = n // 3
        dealias = (np.abs(K1) <= kcut) & (np.abs(K2) <= kcut)

        # Enumerate all nonzero modes sorted by (|k|^2, k1, k2).
        flat = np.arange(n * n)
        nonzero = flat[ksq.ravel() > 0]
        order = np.lexsort((K2.ravel()[nonzero], K1.ravel()[nonzero], ksq.ravel()[nonzero]))
        table_flat = nonzero[order]
        rank = np.full(n * n, len(table_flat), dtype=np.int64)
        rank[table_flat] = np.arange(len(table_flat))

        # Flat index of the conjugate slot -k of each slot k.
        idx = np.arange(n)
        conj_axis = (-idx) % n
        conj_flat = (conj_axis[:, None] * n + conj_axis[None, :]).ravel()

        inv_lam = np.zeros_like(lam)
        inv_lam[ksq > 0] = 1.0 / lam[ksq > 0]

        # Nyquist lines carry self-conjugate modes for which odd derivatives
        # of real fields are not representable; zero them in the derivative
        # wavenumbers (they are already outside the dealiased band).
        kd = kax.astype(np.float64)
        kd[n // 2] = 0.0
        K1d, K2d = np.meshgrid(kd, kd, indexing="ij")

        for name, value in (
            ("k1", K1),
            ("k2", K2),
            ("k1_deriv", K1d),
            ("k2_deriv", K2d),
            ("lam", lam),
            ("inv_lam", inv_lam),
            ("dealias_mask", dealias),
            ("eigenvalues", lam.ravel()[table_flat]),
            ("table_wavevectors", np.stack([K1.ravel()[table_flat], K2.ravel()[table_flat]], axis=1)),
            ("table_flat", table_flat),
            ("mode_rank", rank.reshape(n, n)),
            ("conj_flat", conj_flat),
        ):
            value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def lambda1(self) -> float:
        """Smallest Laplacian eigenvalue (2*pi/L)^2."""
        return float(self.eigenvalues[0])

    @property
    def area(self) -> float:
        """Domain measure |Q| = L^2."""
        return self.L * self.L

    @property
    def num_modes(self) -> int:
        """Number of enumerated nonzero modes (n^2 - 1)."""
        return len(self.eigenvalues)

    @property
    def wavenumber_table(self) -> np.ndarray:
        """Integer wavevectors of every grid slot, shape (n^2, 2), FFT layout order."""
        return np.stack([self.k1.ravel(), self.k2.ravel()], axis=1)

    def deriv_factor(self, axis: int) -> np.ndarray:
        """Spectral derivative multiplier i*(2*pi/L)*k_axis (Nyquist lines zeroed)."""
        k = self.k1_deriv if axis == 0 else self.k2_deriv
        return 1j * (2.0 * np.pi / self.L) * k


def make_grid(n: int, L: float) -> Grid:
    """Build a grid, rejecting odd or undersized n and nonpositive L."""
    return Grid(int(n), float(L))


def _hermitianized(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    flat = coeffs.ravel()
    return 0.5 * (flat + np.conj(flat[grid.conj_flat])).reshape(coeffs.shape)


def _check_hermitian(grid: Grid, coeffs: np.ndarray) -> None:
    sym = _hermitianized(grid, coeffs)
    dev = np.max(np.abs(coeffs - sym))
    scale = np.max(np.abs(coeffs))
    if dev > HERMITIAN_RTOL * scale:
        raise FieldError(
            f"coefficients are not Hermitian-symmetric (deviation {dev:.3e}, scale {scale:.3e})"
        )


@dataclass(frozen=True)
class ScalarField:
    """
    Zero-mean real scalar field stored as its full complex spectrum.

    Construction validates Hermitian symmetry (relative deviation above
    1e-8 is rejected), then symmetrizes exactly and hard-zeroes the mean
    mode.  The coefficient array is frozen afterwards.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self) -> None:
        n = self.grid.n
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (n, n):
            raise FieldError(f"coefficient array must have shape ({n}, {n}), got {c.shape}")
        _check_hermitian(self.grid, c)
        c = _hermitianized(self.grid, c)
        c[0, 0] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zero(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def from_mode(cls, grid: Grid, k: tuple[int, int], coeff: complex) -> "ScalarField":
        """Single-mode field c_k = coeff, c_{-k} = conj(coeff)."""
        c = np.zeros((grid.n, grid.n), dtype=np.complex128)
        i, j = k[0] % grid.n, k[1] % grid.n
        c[i, j] = coeff
        c[(-k[0]) % grid.n, (-k[1]) % grid.n] = np.conj(coeff)
        return cls(grid, c)

    @property
    def is_dealiased(self) -> bool:
        return bool(np.all(self.coeffs[~self.grid.dealias_mask] == 0))

    def dealiased(self) -> "ScalarField":
        return ScalarField(self.grid, self.coeffs * self.grid.dealias_mask)

    def __add__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "ScalarField") -> "ScalarField":
        _same_grid(self, other)
        return ScalarField(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, factor: float) -> "ScalarField":
        return ScalarField(self.grid, self.coeffs * float(factor))

    __rmul__ = __mul__


@dataclass(frozen=True)
class VectorField:
    """Two-component field (u1, u2) on a shared grid."""

    u1: ScalarField
    u2: ScalarField

    def __post_init__(self) -> None:
        if self.u1.grid is not self.u2.grid and self.u1.grid != self.u2.grid:
            raise FieldError("vector components must live on the same grid")

    @property
    def grid(self) -> Grid:
        return self.u1.grid

    @classmethod
    def zero(cls, grid: Grid) -> "VectorField":
        return cls(ScalarField.zero(grid), ScalarField.zero(grid))

    @classmethod
    def from_coeffs(cls, grid: Grid, c1: np.ndarray, c2: np.ndarray) -> "VectorField":
        return cls(ScalarField(grid, c1), ScalarField(grid, c2))

    def stacked(self) -> np.ndarray:
        """Coefficients as a (2, n, n) array (copy)."""
        return np.stack([self.u1.coeffs, self.u2.coeffs])

    def max_divergence(self) -> float:
        """Largest |k . c(k)| relative to the largest |k| |c(k)|."""
        g = self.grid
        div = np.abs(g.k1_deriv * self.u1.coeffs + g.k2_deriv * self.u2.coeffs)
        scale = np.max(np.hypot(g.k1_deriv, g.k2_deriv)
                       * np.hypot(np.abs(self.u1.coeffs), np.abs(self.u2.coeffs)))
        if scale == 0:
            return 0.0
        return float(np.max(div) / scale)

    def is_divergence_free(self, tol: float = 1e-12) -> bool:
        return self.max_divergence() <= tol

    @property
    def is_dealiased(self) -> bool:
        return self.u1.is_dealiased and self.u2.is_dealiased

    def dealiased(self) -> "VectorField":
        return VectorField(self.u1.dealiased(), self.u2.dealiased())

    def __add__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "VectorField") -> "VectorField":
        return VectorField(self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, factor: float) -> "VectorField":
        return VectorField(self.u1 * factor, self.u2 * factor)

    __rmul__ = __mul__


def _same_grid(*fields) -> Grid:
    grid = fields[0].grid
    for f in fields[1:]:
        if f.grid is not grid and f.grid != grid:
            raise FieldError("grid mismatch between operands")
    return grid


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def _to_phys_array(coeffs: np.ndarray) -> np.ndarray:
    n = coeffs.shape[-1]
    return np.fft.ifft2(coeffs, axes=(-2, -1)) * (n * n)


def _to_spec_array(samples: np.ndarray) -> np.ndarray:
    n = samples.shape[-1]
    return np.fft.fft2(samples, axes=(-2, -1)) / (n * n)


def transform_to_physical(field: ScalarField) -> np.ndarray:
    """
    Evaluate the field on the n x n collocation lattice x_ab = (a, b) L / n.

    Raises ``FieldError`` if the imaginary residue of the inverse
    transform exceeds 1e-12 relative to the field amplitude.
    """
    z = _to_phys_array(field.coeffs)
    scale = np.max(np.abs(z.real))
    residue = np.max(np.abs(z.imag))
    if residue > 1e-12 * max(scale, 1e-300):
        raise FieldError(f"imaginary residue {residue:.3e} exceeds tolerance (scale {scale:.3e})")
    return np.ascontiguousarray(z.real)


def transform_to_spectral(samples: np.ndarray, grid: Grid) -> ScalarField:
    """Inverse of :func:`transform_to_physical` for real sample arrays."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.shape != (grid.n, grid.n):
        raise FieldError(f"sample array must have shape ({grid.n}, {grid.n}), got {arr.shape}")
    return ScalarField(grid, _to_spec_array(arr))


# ---------------------------------------------------------------------------
# Differential operators and projections
# ---------------------------------------------------------------------------

def _leray_arrays(grid: Grid, c1: np.ndarray, c2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    k1 = grid.k1_deriv
    k2 = grid.k2_deriv
    ksq = k1 * k1 + k2 * k2
    with np.errstate(invalid="ignore", divide="ignore"):
        dot = np.where(ksq > 0, (k1 * c1 + k2 * c2) / np.where(ksq > 0, ksq, 1.0), 0.0)
    return c1 - k1 * dot, c2 - k2 * dot


def leray_project(u: VectorField) -> VectorField:
    """Orthogonal projection onto divergence-free fields (pressure removal)."""
    p1, p2 = _leray_arrays(u.grid, u.u1.coeffs, u.u2.coeffs)
    return VectorField.from_coeffs(u.grid, p1, p2)


def apply_A(u: VectorField) -> VectorField:
    """Stokes operator: coefficientwise multiplication by lambda(k)."""
    return VectorField.from_coeffs(u.grid, u.grid.lam * u.u1.coeffs, u.grid.lam * u.u2.coeffs)


def apply_A1(omega: ScalarField) -> ScalarField:
    """Scalar -Laplacian: coefficientwise multiplication by lambda(k)."""
    return ScalarField(omega.grid, omega.grid.lam * omega.coeffs)


def apply_A_inverse(u: VectorField) -> VectorField:
    """Inverse of the Stokes operator on zero-mean fields."""
    g = u.grid
    return VectorField.from_coeffs(g, g.inv_lam * u.u1.coeffs, g.inv_lam * u.u2.coeffs)


def apply_A1_inverse(omega: ScalarField) -> ScalarField:
    """Inverse of the scalar -Laplacian on zero-mean fields."""
    return ScalarField(omega.grid, omega.grid.inv_lam * omega.coeffs)


def rot_vec(u: VectorField) -> ScalarField:
    """Scalar curl: rot u = d(u2)/dx1 - d(u1)/dx2."""
    g = u.grid
    c = g.deriv_factor(0) * u.u2.coeffs - g.deriv_factor(1) * u.u1.coeffs
    return ScalarField(g, c)


def rot_scalar(omega: ScalarField) -> VectorField:
    """Vector curl of a scalar: rot w = (dw/dx2, -dw/dx1)."""
    g = omega.grid
    return VectorField.from_coeffs(
        g, g.deriv_factor(1) * omega.coeffs, -g.deriv_factor(0) * omega.coeffs
    )


def mode_mask(grid: Grid, m: int, conjugate_closed: bool = True) -> np.ndarray:
    """
    Boolean mask over grid slots selecting the first ``m`` enumerated modes.

    With ``conjugate_closed`` (the default, required for the projection of a
    real field to stay real) the selection is closed under k -> -k, so the
    kept set may exceed ``m`` by the partners of modes cut mid-pair.
    """
    if not 0 <= m <= grid.num_modes:
        raise ValueError(f"mode count m={m} outside [0, {grid.num_modes}]")
    mask = (grid.mode_rank < m).ravel()
    if conjugate_closed:
        mask = mask | mask[grid.conj_flat]
    return mask.reshape(grid.n, grid.n)


def galerkin_P(field, m: int):
    """Projection onto the first m modes of the eigenvalue enumeration."""
    mask = mode_mask(_field_grid(field), m)
    return _apply_mask(field, mask)


def galerkin_Q(field, m: int):
    """Complementary projection onto modes above the first m."""
    mask = ~mode_mask(_field_grid(field), m)
    return _apply_mask(field, mask)


def _field_grid(field) -> Grid:
    return field.grid


def _apply_mask(field, mask: np.ndarray):
    if isinstance(field, VectorField):
        return VectorField.from_coeffs(field.grid, field.u1.coeffs * mask, field.u2.coeffs * mask)
    return ScalarField(field.grid, field.coeffs * mask)


# ---------------------------------------------------------------------------
# Norms and inner products
# ---------------------------------------------------------------------------

_NORM_WEIGHTS = {"L2": 0, "H1": 1, "Hminus1": -1, "DA": 2}


def _norm_weight(grid: Grid, kind: str) -> np.ndarray:
    try:
        p = _NORM_WEIGHTS[kind]
    except KeyError:
        raise ValueError(f"unknown norm kind {kind!r}; expected one of {sorted(_NORM_WEIGHTS)}") from None
    if p == 0:
        return np.ones_like(grid.lam)
    if p == 1:
        return grid.lam
    if p == -1:
        return grid.inv_lam
    return grid.lam * grid.lam


def norm(field, kind: str = "L2") -> float:
    """
    Spectral Sobolev norm of a scalar or vector field.

    ``L2`` is the plain norm |.|, ``H1`` the gradient norm ||.||, ``Hminus1``
    the dual norm, ``DA`` the |A .| graph norm; all carry the Parseval
    factor |Q|.
    """
    grid = _field_grid(field)
    w = _norm_weight(grid, kind)
    if isinstance(field, VectorField):
        total = np.sum(w * (np.abs(field.u1.coeffs) ** 2 + np.abs(field.u2.coeffs) ** 2))
    else:
        total = np.sum(w * np.abs(field.coeffs) ** 2)
    return float(np.sqrt(grid.area * total))


def inner(f, g) -> float:
    """L2 inner product of two fields of matching type."""
    grid = _same_grid(f, g)
    if isinstance(f, VectorField) != isinstance(g, VectorField):
        raise FieldError("cannot pair a scalar with a vector field")
    if isinstance(f, VectorField):
        s = np.sum(f.u1.coeffs * np.conj(g.u1.coeffs) + f.u2.coeffs * np.conj(g.u2.coeffs))
    else:
        s = np.sum(f.coeffs * np.conj(g.coeffs))
    return float(grid.area * s.real)


# ---------------------------------------------------------------------------
# Trilinear advective forms
# ---------------------------------------------------------------------------

def _advect_scalar_arrays(grid: Grid, u_phys: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Dealiased spectrum of (u . grad) f for one scalar spectrum c."""
    d1 = _to_phys_array(grid.deriv_factor(0) * c).real
    d2 = _to_phys_array(grid.deriv_factor(1) * c).real
    q = u_phys[0] * d1 + u_phys[1] * d2
    out = _to_spec_array(q)
    out *= grid.dealias_mask
    out[0, 0] = 0.0
    return out


def trilinear_b(u: VectorField, v: VectorField, w: VectorField) -> float:
    """
    Advective form b(u, v, w) = sum_ij int u_i d(v_j)/dx_i w_j dx.

    Evaluated pseudo-spectrally with 2/3-rule dealiasing of the quadratic
    product and exact Parseval quadrature; inputs are truncated to the
    dealiased band, where the result equals the direct convolution sum.
    """
    grid = _same_grid(u, v, w)
    mask = grid.dealias_mask
    u_phys = _to_phys_array(np.stack([u.u1.coeffs * mask, u.u2.coeffs * mask])).real
    total = 0.0
    for vc, wc in ((v.u1.coeffs, w.u1.coeffs), (v.u2.coeffs, w.u2.coeffs)):
        q = _advect_scalar_arrays(grid, u_phys, vc * mask)
        total += np.sum(q * np.conj(wc * mask)).real
    return float(grid.area * total)


def trilinear_b1(u: VectorField, omega: ScalarField, psi: ScalarField) -> float:
    """Scalar advective form b1(u, w, p) = sum_i int u_i dw/dx_i p dx."""
    grid = _same_grid(u, omega, psi)
    mask = grid.dealias_mask
    u_phys = _to_phys_array(np.stack([u.u1.coeffs * mask, u.u2.coeffs * mask])).real
    q = _advect_scalar_arrays(grid, u_phys, omega.coeffs * mask)
    return float(grid.area * np.sum(q * np.conj(psi.coeffs * mask)).real)


# ---------------------------------------------------------------------------
# Nodal observation machinery
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NodeSet:
    """
    N = s^2 observation points, one in each square of an s x s covering of Q.

    Default placement is the center of each covering square.  When every
    node lies on a collocation point the sampling fast path reads physical
    samples directly; otherwise the exact trigonometric interpolant is
    evaluated.
    """

    grid: Grid
    side: int
    points: np.ndarray

    def __post_init__(self) -> None:
        s, L, n = self.side, self.grid.L, self.grid.n
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (s * s, 2):
            raise ValueError(f"expected {s * s} points of dimension 2, got shape {pts.shape}")
        if np.any(pts < 0) or np.any(pts >= L):
            raise ValueError("nodes must lie inside [0, L) x [0, L)")
        h = L / s
        sq = np.floor(pts / h).astype(np.int64)
        owners = sq[:, 0] * s + sq[:, 1]
        if len(np.unique(owners)) != s * s:
            raise ValueError("node set must place exactly one point in each covering square")
        # Sort node storage by owning square so interpolation is a gather.
        perm = np.argsort(owners)
        pts = pts[perm]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

        frac = pts * n / L
        rounded = np.rint(frac)
        aligned = bool(np.max(np.abs(frac - rounded)) < 1e-9)
        object.__setattr__(self, "aligned", aligned)
        if aligned:
            gi = (rounded.astype(np.int64)) % n
            gi.setflags(write=False)
            object.__setattr__(self, "grid_indices", gi)
        else:
            object.__setattr__(self, "grid_indices", None)

        cells = np.arange(n)
        cell_sq = np.minimum((cells * s) // n, s - 1)
        square_of_cell = cell_sq[:, None] * s + cell_sq[None, :]
        square_of_cell.setflags(write=False)
        object.__setattr__(self, "square_of_cell", square_of_cell)

    @property
    def count(self) -> int:
        return self.side * self.side


def make_node_set(grid: Grid, count: int | None = None, side: int | None = None,
                  points: np.ndarray | None = None) -> NodeSet:
    """
    Build a node set from a square count N = s^2 (or the side s directly).

    Without explicit ``points`` the nodes sit at covering-square centers.
    """
    if side is None:
        if count is None:
            raise ValueError("give either count or side")
        side = int(np.sqrt(count))
        if side * side != count:
            raise ValueError(f"node count must be a perfect square, got {count}")
    side = int(side)
    if side < 1:
        raise ValueError("side must be >= 1")
    if points is None:
        h = grid.L / side
        axis = (np.arange(side) + 0.5) * h
        P1, P2 = np.meshgrid(axis, axis, indexing="ij")
        points = np.stack([P1.ravel(), P2.ravel()], axis=1)
    return NodeSet(grid, side, points)


def _sample_scalar(coeffs: np.ndarray, nodes: NodeSet) -> np.ndarray:
    grid = nodes.grid
    if nodes.aligned:
        phys = _to_phys_array(coeffs).real
        gi = nodes.grid_indices
        return phys[gi[:, 0], gi[:, 1]]
    k1 = grid.k1.ravel().astype(np.float64)
    k2 = grid.k2.ravel().astype(np.float64)
    phase = np.exp(
        2j * np.pi / grid.L * (np.outer(nodes.points[:, 0], k1) + np.outer(nodes.points[:, 1], k2))
    )
    return (phase @ coeffs.ravel()).real


def nodal_sample(field, nodes: NodeSet) -> np.ndarray:
    """
    Field values at the nodes via the exact trigonometric interpolant.

    Returns shape (N,) for scalars and (N, 2) for vector fields.
    """
    if isinstance(field, VectorField):
        return np.stack(
            [_sample_scalar(field.u1.coeffs, nodes), _sample_scalar(field.u2.coeffs, nodes)], axis=1
        )
    return _sample_scalar(field.coeffs, nodes)


def nodal_values_max(field, nodes: NodeSet) -> float:
    """max_j |w(x^j)| with the Euclidean magnitude for vector fields."""
    vals = nodal_sample(field, nodes)
    if vals.ndim == 2:
        return float(np.max(np.hypot(vals[:, 0], vals[:, 1])))
    return float(np.max(np.abs(vals)))


def _interpolant_scalar(values: np.ndarray, nodes: NodeSet) -> np.ndarray:
    phys = values[nodes.square_of_cell]
    phys = phys - phys.mean()
    return _to_spec_array(phys)


def nodal_interpolant(values: np.ndarray, nodes: NodeSet, grid: Grid):
    """
    Piecewise-constant field equal to values[j] on covering square Q_j,
    with its mean removed.  values of shape (N,) yield a ScalarField,
    (N, 2) a VectorField.
    """
    if grid != nodes.grid:
        raise FieldError("node set belongs to a different grid")
    vals = np.asarray(values, dtype=np.float64)
    if vals.shape[0] != nodes.count:
        raise ValueError(f"expected {nodes.count} values, got {vals.shape[0]}")
    if vals.ndim == 2:
        return VectorField.from_coeffs(
            grid, _interpolant_scalar(vals[:, 0], nodes), _interpolant_scalar(vals[:, 1], nodes)
        )
    return ScalarField(grid, _interpolant_scalar(vals, nodes))
