"""Spectral grid, coefficient fields, operator symbols, and norms.

A mode grid discretizes the frequency side of the group Fourier transform on
H^n: a finite set of nonzero lambda nodes (symmetric about 0, log-spaced in
magnitude) with trapezoid quadrature weights carrying the Plancherel measure
|lambda|^n d lambda, and a truncated set of Hermite multi-indices.  Spectral
fields hold one complex matrix block per node, indexed (node, k, l); operator
symbols act as multipliers along the row index k.

The overall Plancherel constant of the adopted transform convention is not
hardcoded; it is measured once by `subwave.transform.calibrate_plancherel`
and stored on the grid, entering every quadrature weight.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .group import enumerate_multi_indices, oscillator_eigenvalue

__all__ = [
    "ModeGrid",
    "build_grid",
    "SpectralField",
    "SubLaplacianSymbol",
    "AbelianSymbol",
    "l2_norm",
    "sobolev_norm",
    "homogeneous_sobolev_norm",
    "weighted_inner",
    "save_spectral_field",
    "load_spectral_field",
]

_MAGIC = b"SUBWAVE-SF1\n"


@dataclass
class ModeGrid:
    """Frequency-side discretization: lambda nodes, weights, Hermite block.

    Attributes
    ----------
    n : int
        Heisenberg index; the spatial group is R^{2n+1}.
    lambda_nodes : array
        Nonzero nodes, ascending, symmetric about 0.
    base_weights : array
        Trapezoid weights including the |lambda|^n density but not the
        calibration constant.
    mu_max : float
        Hermite truncation; indices k with mu_k <= mu_max are retained.
    plancherel_constant : float
        Multiplies base_weights; 1.0 until calibrated.
    """

    n: int
    lambda_nodes: np.ndarray
    base_weights: np.ndarray
    mu_max: float
    plancherel_constant: float = 1.0
    multi_indices: tuple = field(default=None)
    stamp: str = field(default=None)

    def __post_init__(self):
        self.lambda_nodes = np.asarray(self.lambda_nodes, dtype=float)
        self.base_weights = np.asarray(self.base_weights, dtype=float)
        if self.lambda_nodes.ndim != 1 or self.lambda_nodes.size < 2:
            raise ValueError("need at least two lambda nodes")
        if np.any(self.lambda_nodes == 0.0):
            raise ValueError("lambda = 0 carries no Plancherel mass and is not a valid node")
        if np.any(np.diff(self.lambda_nodes) <= 0):
            raise ValueError("lambda nodes must be strictly increasing")
        if self.base_weights.shape != self.lambda_nodes.shape:
            raise ValueError("weights and nodes must have matching shapes")
        if np.any(self.base_weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if self.multi_indices is None:
            self.multi_indices = tuple(enumerate_multi_indices(self.n, self.mu_max))
        if self.stamp is None:
            # stamp keys transform-side caches; changing any grid data changes it
            digest = hashlib.sha256()
            digest.update(np.int64(self.n).tobytes())
            digest.update(np.float64(self.mu_max).tobytes())
            digest.update(self.lambda_nodes.tobytes())
            digest.update(self.base_weights.tobytes())
            self.stamp = "grid-" + digest.hexdigest()[:12]
        self.mu_values = np.array([oscillator_eigenvalue(k) for k in self.multi_indices], dtype=float)

    @property
    def node_count(self) -> int:
        return self.lambda_nodes.size

    @property
    def block_size(self) -> int:
        return len(self.multi_indices)

    @property
    def weights(self) -> np.ndarray:
        return self.plancherel_constant * self.base_weights

    def field_shape(self) -> tuple:
        return (self.node_count, self.block_size, self.block_size)


def build_grid(lambda_min: float, lambda_max: float, node_count: int,
               mu_max: float, n: int = 1) -> ModeGrid:
    """Log-spaced symmetric lambda grid with trapezoid Plancherel weights.

    `node_count` is the total number of nodes; half are placed at
    -lambda for each positive node lambda.  Weight at an interior node is
    |lambda|^n times half the span of its two neighbors, with the usual
    one-sided factors at the ends of each branch.
    """
    if not (0 < lambda_min < lambda_max):
        raise ValueError(f"need 0 < lambda_min < lambda_max, got ({lambda_min}, {lambda_max})")
    if node_count < 2 or node_count % 2:
        raise ValueError(f"node_count must be even and >= 2, got {node_count}")
    half = node_count // 2
    if half == 1:
        mags = np.array([lambda_min])
    else:
        mags = np.geomspace(lambda_min, lambda_max, half)
    spans = np.empty(half)
    if half == 1:
        spans[0] = lambda_max - lambda_min
    else:
        spans[0] = 0.5 * (mags[1] - mags[0])
        spans[-1] = 0.5 * (mags[-1] - mags[-2])
        if half > 2:
            spans[1:-1] = 0.5 * (mags[2:] - mags[:-2])
    w_half = (mags ** n) * spans
    nodes = np.concatenate([-mags[::-1], mags])
    weights = np.concatenate([w_half[::-1], w_half])
    return ModeGrid(n=n, lambda_nodes=nodes, base_weights=weights, mu_max=mu_max)


@dataclass
class SpectralField:
    """Complex coefficient tensor on a mode grid, indexed (node, k, l).

    Treated as an immutable snapshot: operations return new fields.
    """

    grid: ModeGrid
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != self.grid.field_shape():
            raise ValueError(
                f"coefficient shape {self.coefficients.shape} does not match grid "
                f"{self.grid.field_shape()}"
            )
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("spectral coefficients must be finite")

    @classmethod
    def zeros(cls, grid: ModeGrid) -> "SpectralField":
        return cls(grid, np.zeros(grid.field_shape(), dtype=complex))

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients.copy())

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coefficients + other.coefficients)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return SpectralField(self.grid, self.coefficients - other.coefficients)

    def __mul__(self, scalar) -> "SpectralField":
        return SpectralField(self.grid, self.coefficients * scalar)

    __rmul__ = __mul__

    def _check_compatible(self, other: "SpectralField"):
        if self.grid.stamp != other.grid.stamp:
            raise ValueError("fields live on different grids")


class SubLaplacianSymbol:
    """Symbol of (-L)^power on H^n: (|lambda| mu_k)^power.

    Homogeneous of degree nu = 2 * power under the group dilations.
    """

    def __init__(self, power: int = 1):
        if power < 1 or int(power) != power:
            raise ValueError(f"power must be a positive integer, got {power}")
        self.power = int(power)

    @property
    def nu(self) -> int:
        return 2 * self.power

    def value(self, lam: float, k) -> float:
        if lam == 0:
            raise ValueError("symbol is undefined at lambda = 0")
        return (abs(lam) * oscillator_eigenvalue(k)) ** self.power

    def values(self, grid: ModeGrid) -> np.ndarray:
        """Multiplier array of shape (node_count, block_size)."""
        base = np.abs(grid.lambda_nodes)[:, None] * grid.mu_values[None, :]
        return base ** self.power


class AbelianSymbol:
    """Positive homogeneous symbol on R^d.

    radial=False gives sum_j a_j xi_j^order (order even); radial=True gives
    (sum_j a_j xi_j^2)^{order/2}, which for unit coefficients is the symbol
    of (-Laplacian)^{order/2}.  Both are homogeneous of degree nu = order.
    """

    def __init__(self, coefficients, order: int, radial: bool = False):
        self.coefficients = np.asarray(coefficients, dtype=float)
        if self.coefficients.ndim != 1 or self.coefficients.size < 1:
            raise ValueError("coefficients must be a non-empty 1-d sequence")
        if np.any(self.coefficients <= 0):
            raise ValueError("coefficients must be positive for a Rockland-type symbol")
        if order < 2 or order % 2:
            raise ValueError(f"order must be a positive even integer, got {order}")
        self.order = int(order)
        self.radial = bool(radial)

    @property
    def dim(self) -> int:
        return self.coefficients.size

    @property
    def nu(self) -> int:
        return self.order

    def value_at(self, xi: np.ndarray) -> np.ndarray:
        """Evaluate at frequency vectors; xi has shape (..., dim)."""
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.dim:
            raise ValueError(f"frequency dimension {xi.shape[-1]} != {self.dim}")
        if self.radial:
            return (np.tensordot(xi * xi, self.coefficients, axes=([-1], [0]))) ** (self.order // 2)
        return np.tensordot(xi ** self.order, self.coefficients, axes=([-1], [0]))


def symbol_value(provider, lam_or_xi, k=None):
    """Single symbol evaluation for either provider flavor."""
    if isinstance(provider, SubLaplacianSymbol):
        if k is None:
            raise ValueError("Hermite multi-index required for the sub-Laplacian symbol")
        return provider.value(lam_or_xi, k)
    return float(provider.value_at(np.asarray(lam_or_xi, dtype=float)))


def _squared_mass(field: SpectralField, multiplier: np.ndarray | None = None) -> float:
    c2 = np.abs(field.coefficients) ** 2
    if multiplier is not None:
        c2 = c2 * multiplier[:, :, None]
    return float(np.sum(field.grid.weights * np.sum(c2, axis=(1, 2))))


def l2_norm(field: SpectralField) -> float:
    """Plancherel L^2 norm: weighted Hilbert-Schmidt mass of the blocks."""
    return np.sqrt(_squared_mass(field))


def sobolev_norm(field: SpectralField, provider, s: float, mass: float = 1.0) -> float:
    """Inhomogeneous Sobolev norm of order s adapted to the provider.

    Applies the multiplier (mass + symbol)^{2s/nu} to squared coefficients,
    i.e. the norm of (mass + R)^{s/nu} u where R has homogeneity nu.  mass=1
    is the standard inhomogeneous scale; mass=0 recovers the homogeneous one.
    """
    if mass < 0:
        raise ValueError("mass must be non-negative")
    sym = provider.values(field.grid)
    if mass == 0.0 and s != 0 and np.any(sym == 0):
        raise ValueError("zero symbol value with mass=0 gives a degenerate multiplier")
    mult = (mass + sym) ** (2.0 * s / provider.nu)
    return np.sqrt(_squared_mass(field, mult))


def homogeneous_sobolev_norm(field: SpectralField, provider, a: float) -> float:
    """Homogeneous seminorm of order a: the L^2 norm of R^{a/nu} u."""
    sym = provider.values(field.grid)
    if a < 0:
        raise ValueError("order must be non-negative")
    if a == 0:
        return l2_norm(field)
    mult = sym ** (2.0 * a / provider.nu)
    return np.sqrt(_squared_mass(field, mult))


def weighted_inner(f: SpectralField, g: SpectralField) -> complex:
    """Plancherel inner product <f, g> with the grid weights."""
    f._check_compatible(g)
    prods = np.sum(np.conj(f.coefficients) * g.coefficients, axis=(1, 2))
    return complex(np.sum(f.grid.weights * prods))


def save_spectral_field(field: SpectralField, path: str):
    """Write a field to the documented container format.

    Layout: magic line, 8-byte little-endian header length, JSON header with
    the grid data (n, nodes, base weights, calibration constant, mu_max,
    multi-indices, coefficient shape), then raw row-major complex128
    little-endian coefficients.
    """
    header = {
        "n": field.grid.n,
        "mu_max": field.grid.mu_max,
        "lambda_nodes": field.grid.lambda_nodes.tolist(),
        "base_weights": field.grid.base_weights.tolist(),
        "plancherel_constant": field.grid.plancherel_constant,
        "multi_indices": [list(k) for k in field.grid.multi_indices],
        "shape": list(field.coefficients.shape),
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(len(blob).to_bytes(8, "little"))
        fh.write(blob)
        fh.write(np.ascontiguousarray(field.coefficients, dtype="<c16").tobytes())


def load_spectral_field(path: str) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError(f"not a spectral field container: {path}")
        hlen = int.from_bytes(fh.read(8), "little")
        header = json.loads(fh.read(hlen).decode("utf-8"))
        payload = fh.read()
    grid = ModeGrid(
        n=header["n"],
        lambda_nodes=np.array(header["lambda_nodes"]),
        base_weights=np.array(header["base_weights"]),
        mu_max=header["mu_max"],
        plancherel_constant=header["plancherel_constant"],
        multi_indices=tuple(tuple(k) for k in header["multi_indices"]),
    )
    shape = tuple(header["shape"])
    coeffs = np.frombuffer(payload, dtype="<c16").reshape(shape)
    return SpectralField(grid, coeffs.astype(complex))
