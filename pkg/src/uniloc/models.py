"""Builders for the random unitary band operator families.

All constructors return exactly unitary finite matrices (products of 2x2
unitary blocks, diagonal phase factors, or tensor powers thereof), stored
as :class:`~uniloc.banded.ComplexBandMatrix`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .arcs import TWO_PI, ArcSet
from .banded import ComplexBandMatrix
from .disorder import DisorderRealization, PhaseDistribution, sample_phases

__all__ = [
    "BlockScattering",
    "ModelSpec",
    "scattering_block",
    "build_block_unitary",
    "build_band_s",
    "build_band_1d",
    "build_anderson_d",
    "build_cmv",
    "random_verblunsky",
    "cmv_gauge_diagonal",
    "gauge_residual",
    "gauge_cmv_to_monodromy",
    "build_walk_s",
    "build_qw",
    "random_coins",
    "sd_spectrum_arcs",
    "almost_sure_spectrum",
    "lambda0",
    "apply_diag_phases",
    "gamma_rephasing_diagonal",
    "model_from_spec",
]

FAMILIES = ("magnetic-ring-halfline", "band-1d", "anderson-d", "cmv", "quantum-walk")


@dataclass(frozen=True)
class BlockScattering:
    """One 2x2 scattering block: amplitudes (r, t) with r^2 + t^2 = 1 and three phases."""

    r: float
    t: float
    alpha: float = 0.0
    gamma: float = 0.0
    theta: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.r <= 1.0 and 0.0 <= self.t <= 1.0):
            raise ValueError(f"amplitudes must lie in [0,1], got r={self.r}, t={self.t}")
        if abs(self.r**2 + self.t**2 - 1.0) > 1e-12:
            raise ValueError(f"r^2 + t^2 = {self.r**2 + self.t**2} != 1")

    def matrix(self) -> np.ndarray:
        return scattering_block(self.r, self.t, self.alpha, self.gamma, self.theta)


def scattering_block(r, t, alpha=0.0, gamma=0.0, theta=0.0) -> np.ndarray:
    """General 2x2 unitary scattering block with amplitudes (r, t)."""
    return np.exp(-1j * theta) * np.array([
        [r * np.exp(-1j * alpha), 1j * t * np.exp(1j * gamma)],
        [1j * t * np.exp(-1j * gamma), r * np.exp(1j * alpha)],
    ])


def _block_diag_csr(dim, blocks, start, cap_sites=(), cap_values=(), wrap_pair=None):
    """CSR of a direct sum of 2x2 blocks on pairs {start, start+1}, {start+2, ...}.

    ``cap_sites`` receive 1x1 scalar blocks ``cap_values``; ``wrap_pair``
    optionally places one block on the wrapped pair (dim-1, 0).
    """
    rows, cols, vals = [], [], []
    for idx, blk in enumerate(blocks):
        base = start + 2 * idx
        for a in range(2):
            for b in range(2):
                rows.append(base + a)
                cols.append(base + b)
                vals.append(blk[a, b])
    for site, value in zip(cap_sites, cap_values):
        rows.append(site)
        cols.append(site)
        vals.append(value)
    if wrap_pair is not None:
        blk = wrap_pair
        pair = (dim - 1, 0)
        for a in range(2):
            for b in range(2):
                rows.append(pair[a])
                cols.append(pair[b])
                vals.append(blk[a, b])
    return sp.csr_matrix((np.array(vals, dtype=np.complex128), (rows, cols)), shape=(dim, dim))


def build_block_unitary(blocks, n: int, half_line: bool = True, s0: complex = 1.0 + 0.0j):
    """One-period evolution U = U_o U_e from 2x2 blocks.

    Block k (k = 1..n-1) couples basis sites (k-1, k); odd-k blocks make up
    U_o, even-k blocks U_e, and ``s0`` is the 1x1 top block of U_e.  The
    dangling site of whichever factor does not pair up at the bottom is
    closed with a scalar 1, keeping U exactly unitary.
    """
    if n < 3:
        raise ValueError(f"dim {n} too small, need >= 3")
    mats = [b.matrix() if isinstance(b, BlockScattering) else np.asarray(b, dtype=np.complex128)
            for b in blocks]
    if len(mats) < n - 1:
        raise ValueError(f"need {n - 1} blocks for dim {n}, got {len(mats)}")
    if not half_line:
        raise ValueError("full-line block operators use build_band_1d closures")
    odd = [mats[k - 1] for k in range(1, n) if k % 2 == 1 and k + 1 <= n]
    even = [mats[k - 1] for k in range(2, n) if k % 2 == 0 and k + 1 <= n]
    # U_o pairs {0,1},{2,3},...; U_e pairs {1,2},{3,4},... after the scalar s0.
    odd_caps, even_caps = [], [0]
    odd_vals, even_vals = [], [s0]
    if n % 2 == 1:
        odd_caps.append(n - 1)
        odd_vals.append(1.0 + 0.0j)
    else:
        even_caps.append(n - 1)
        even_vals.append(1.0 + 0.0j)
    u_o = _block_diag_csr(n, odd, 0, cap_sites=odd_caps, cap_values=odd_vals)
    u_e = _block_diag_csr(n, even, 1, cap_sites=even_caps, cap_values=even_vals)
    u = u_o @ u_e
    return ComplexBandMatrix.from_csr(u, periodic=False, labels=np.arange(n), unitary=True)


def _band_factors(t: float, n: int, closure: str):
    r = np.sqrt(1.0 - t * t)
    s_odd = np.array([[r, t], [-t, r]], dtype=np.complex128)
    s_even = np.array([[r, -t], [t, r]], dtype=np.complex128)
    if closure == "periodic":
        if n % 2 != 0:
            raise ValueError(f"periodic closure needs even dim, got {n}")
        u_o = _block_diag_csr(n, [s_odd] * (n // 2), 0)
        u_e = _block_diag_csr(n, [s_even] * (n // 2 - 1), 1, wrap_pair=s_even)
    elif closure == "reflecting":
        # Scalar caps: s0 = 1 on top of U_e (the half-line convention) and a
        # unit phase closing whichever factor dangles at the bottom.
        odd_caps, even_caps = [], [0]
        odd_vals, even_vals = [], [1.0 + 0.0j]
        n_odd = (n - (n % 2)) // 2
        n_even = (n - 1 - ((n - 1) % 2)) // 2
        if n % 2 == 1:
            odd_caps.append(n - 1)
            odd_vals.append(1.0 + 0.0j)
        else:
            even_caps.append(n - 1)
            even_vals.append(1.0 + 0.0j)
        u_o = _block_diag_csr(n, [s_odd] * n_odd, 0, cap_sites=odd_caps, cap_values=odd_vals)
        u_e = _block_diag_csr(n, [s_even] * n_even, 1, cap_sites=even_caps, cap_values=even_vals)
    else:
        raise ValueError(f"unknown closure {closure!r}")
    return u_o, u_e


def build_band_s(t: float, n: int, closure: str = "periodic", centered_labels: bool = True):
    """The deterministic 2-periodic five-diagonal unitary S(t) on n sites."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0,1], got {t}")
    u_o, u_e = _band_factors(t, n, closure)
    labels = np.arange(n) - (n // 2 if centered_labels else 0)
    return ComplexBandMatrix.from_csr(u_o @ u_e, periodic=(closure == "periodic"),
                                      labels=labels, unitary=True)


def apply_diag_phases(s: ComplexBandMatrix, thetas: np.ndarray) -> ComplexBandMatrix:
    """D S with D = diag(e^{-i theta_k}): row-scale the band diagonals."""
    thetas = np.asarray(thetas, dtype=float)
    if thetas.shape[0] != s.dim:
        raise ValueError("phase count must equal dim")
    phase = np.exp(-1j * thetas)
    diags = {off: phase * s.diagonal(off) for off in s.offsets}
    return ComplexBandMatrix(s.dim, diags, periodic=s.periodic, labels=s.labels, unitary=s.unitary)


def build_band_1d(t: float, phases: np.ndarray, closure: str = "periodic") -> ComplexBandMatrix:
    """Finite-volume U = D S in one dimension, exactly unitary under the chosen closure."""
    phases = np.asarray(phases, dtype=float)
    s = build_band_s(t, phases.shape[0], closure=closure,
                     centered_labels=(closure == "periodic"))
    return apply_diag_phases(s, phases)


def build_anderson_s(t: float, d: int, ell: int) -> ComplexBandMatrix:
    """d-fold tensor power of the periodic S(t) on a box of side ell (even)."""
    if d < 1:
        raise ValueError(f"dimension d must be >= 1, got {d}")
    if ell % 2 != 0:
        raise ValueError(f"per-factor periodic closure needs even side, got {ell}")
    s1 = build_band_s(t, ell, closure="periodic").to_csr()
    prod = s1
    for _ in range(d - 1):
        prod = sp.kron(prod, s1, format="csr")
    coords = np.indices((ell,) * d).reshape(d, -1).T - ell // 2
    labels = coords[:, 0] if d == 1 else coords
    return ComplexBandMatrix.from_csr(prod, periodic=True, labels=labels, unitary=True)


def build_anderson_d(t: float, d: int, ell: int, phases: np.ndarray) -> ComplexBandMatrix:
    """Unitary Anderson generator D S_d(t) on the box {0..ell-1}^d, row-major sites."""
    s = build_anderson_s(t, d, ell)
    return apply_diag_phases(s, phases)


def build_cmv(alphas, closure: bool = True):
    """Top-left N x N corner of the CMV matrix of the given Verblunsky coefficients.

    With ``closure`` the final coefficient is pushed to modulus one, which
    decouples the last site and restores exact unitarity; otherwise the raw
    (boundary-defective) corner is returned with ``boundary_defect`` set.
    """
    alphas = np.asarray(alphas, dtype=np.complex128).copy()
    n = alphas.shape[0]
    if n < 3:
        raise ValueError(f"need at least 3 coefficients, got {n}")
    if np.any(np.abs(alphas) >= 1.0):
        bad = int(np.argmax(np.abs(alphas) >= 1.0))
        raise ValueError(f"|alpha_{bad}| = {abs(alphas[bad])} >= 1")
    if closure:
        a = alphas[n - 1]
        alphas[n - 1] = np.exp(1j * np.angle(a)) if a != 0 else 1.0 + 0.0j
    rho = np.sqrt(1.0 - np.abs(alphas) ** 2)

    def theta_block(k):
        return np.array([[np.conj(alphas[k]), rho[k]], [rho[k], -alphas[k]]])

    l_blocks = [theta_block(k) for k in range(0, n - 1, 2)]
    m_blocks = [theta_block(k) for k in range(1, n - 1, 2)]
    if n % 2 == 0:
        # M dangles at site n-1; its 1x1 corner is conj(alpha_{n-1}).
        l_fac = _block_diag_csr(n, l_blocks, 0)
        m_fac = _block_diag_csr(n, m_blocks, 1, cap_sites=(0, n - 1),
                                cap_values=(1.0 + 0.0j, np.conj(alphas[n - 1])))
    else:
        l_fac = _block_diag_csr(n, l_blocks, 0, cap_sites=(n - 1,),
                                cap_values=(np.conj(alphas[n - 1]),))
        m_fac = _block_diag_csr(n, m_blocks, 1, cap_sites=(0,), cap_values=(1.0 + 0.0j,))
    c = ComplexBandMatrix.from_csr(l_fac @ m_fac, periodic=False,
                                   labels=np.arange(n), unitary=closure)
    c.boundary_defect = not closure
    return c


def random_verblunsky(r: float, dist: PhaseDistribution, master_seed: int,
                      realization_index: int, n: int) -> np.ndarray:
    """Constant-modulus coefficients r e^{i eta_k} with eta_k = theta_0 + ... + theta_k."""
    if not (0.0 < r < 1.0):
        raise ValueError(f"modulus must lie in (0,1), got {r}")
    real = sample_phases(dist, master_seed, realization_index, n)
    eta = np.mod(np.cumsum(real.phases), TWO_PI)
    return r * np.exp(1j * eta)


def cmv_gauge_diagonal(thetas: np.ndarray) -> np.ndarray:
    """Diagonal phases conjugating the constant-modulus CMV matrix onto -U.

    Solving the entrywise phase-matching equations on interior rows gives
    (with eta_k the cumulative phase sums and a_1 = 0 as gauge choice)

        a_{2k}   = pi + eta_1 + theta_2 + theta_4 + ... + theta_{2k-2},
        a_{2k+1} = -(theta_3 + theta_5 + ... + theta_{2k+1}),

    extended to a_0 by the same recursion.  The result is unique up to one
    global phase.
    """
    thetas = np.asarray(thetas, dtype=float)
    n = thetas.shape[0]
    a = np.zeros(n)
    if n > 1:
        a[1] = 0.0
    eta1 = thetas[0] + thetas[1] if n > 1 else thetas[0]
    even_sites = np.arange(2, n, 2)
    for k in even_sites:
        a[k] = np.pi + eta1 + np.sum(thetas[2:k:2])
    for k in np.arange(3, n, 2):
        a[k] = -np.sum(thetas[3:k + 1:2])
    if n > 0:
        a[0] = np.pi + (thetas[1] if n > 1 else 0.0)
    return np.exp(1j * a)


def gauge_residual(c: ComplexBandMatrix, u: ComplexBandMatrix, lam: np.ndarray,
                   interior: slice | None = None) -> float:
    """Max-norm of (Lam C Lam* + U) restricted to interior rows."""
    if c.dim != u.dim:
        raise ValueError("mismatched dimensions")
    n = c.dim
    if interior is None:
        interior = slice(2, n - 3)
    resid = 0.0
    for off in set(c.offsets) | set(u.offsets):
        cols = (np.arange(n) + off) % n
        row_vals = lam * c.diagonal(off) * np.conj(lam[cols]) + u.diagonal(off)
        resid = max(resid, float(np.max(np.abs(row_vals[interior]))))
    return resid


def gauge_cmv_to_monodromy(c: ComplexBandMatrix, u: ComplexBandMatrix,
                           thetas: np.ndarray, tol: float = 1e-10):
    """The conjugating diagonal Lam with Lam C Lam* = -U on interior rows."""
    lam = cmv_gauge_diagonal(thetas)
    resid = gauge_residual(c, u, lam)
    if resid > tol:
        raise ValueError(f"gauge mismatch: interior residual {resid:.3e} > {tol:.1e}; "
                         "check that C and U share phases and amplitudes")
    return lam, resid


def build_walk_s(t: float, n_sites: int) -> ComplexBandMatrix:
    """Deterministic part of the coined-walk band matrix (zero diagonal, bandwidth 3)."""
    r = np.sqrt(1.0 - t * t)
    dim = 2 * n_sites
    idx = np.arange(dim)
    even = idx % 2 == 0
    # Even rows 2j: (t, -r) at columns 2j-2, 2j-1; odd rows 2j+1: (r, t) at 2j+2, 2j+3.
    diags = {off: vals.astype(np.complex128) for off, vals in {
        -2: np.where(even, t, 0.0), -1: np.where(even, -r, 0.0),
        1: np.where(even, 0.0, r), 2: np.where(even, 0.0, t)}.items()}
    labels = idx // 2 - n_sites // 2
    return ComplexBandMatrix(dim, diags, periodic=True, labels=labels, unitary=True)


def build_qw(coins: np.ndarray, closure: str = "periodic", coin_tol: float = 1e-12) -> ComplexBandMatrix:
    """One-step coined walk on n sites (dim 2n), basis (up, down) interleaved by site.

    ``coins`` has shape (n, 2, 2); coin k steers the amplitude leaving site
    k (spin-up to the right, spin-down to the left), with periodic closure
    in position.
    """
    coins = np.asarray(coins, dtype=np.complex128)
    n = coins.shape[0]
    if coins.shape != (n, 2, 2):
        raise ValueError(f"coins must be (n, 2, 2), got {coins.shape}")
    gram = np.einsum("kia,kib->kab", np.conj(coins), coins)
    defect = np.max(np.abs(gram - np.eye(2)[None]))
    if defect > coin_tol:
        raise ValueError(f"non-unitary coin: residual {defect:.3e}")
    if closure != "periodic":
        raise ValueError(f"unknown closure {closure!r}")
    dim = 2 * n
    rows, cols, vals = [], [], []
    for k in range(n):
        a, b = coins[k, 0, 0], coins[k, 0, 1]
        c, d = coins[k, 1, 0], coins[k, 1, 1]
        up_row = 2 * ((k + 1) % n)
        down_row = 2 * ((k - 1) % n) + 1
        rows += [up_row, up_row, down_row, down_row]
        cols += [2 * k, 2 * k + 1, 2 * k, 2 * k + 1]
        vals += [a, b, c, d]
    mat = sp.csr_matrix((np.array(vals), (rows, cols)), shape=(dim, dim))
    labels = np.arange(dim) // 2 - n // 2
    return ComplexBandMatrix.from_csr(mat, periodic=True, labels=labels, unitary=True)


def random_coins(t: float, dist: PhaseDistribution, master_seed: int,
                 realization_index: int, n_sites: int) -> np.ndarray:
    """Per-site coins t,r with i.i.d. up/down phases; transition probabilities site-free."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0,1], got {t}")
    r = np.sqrt(1.0 - t * t)
    real = sample_phases(dist, master_seed, realization_index, 2 * n_sites)
    up, down = real.phases[0::2], real.phases[1::2]
    coins = np.empty((n_sites, 2, 2), dtype=np.complex128)
    coins[:, 0, 0] = np.exp(-1j * up) * t
    coins[:, 0, 1] = -np.exp(-1j * up) * r
    coins[:, 1, 0] = np.exp(-1j * down) * r
    coins[:, 1, 1] = np.exp(-1j * down) * t
    return coins


def walk_diag_phases(phases: np.ndarray, n_sites: int) -> np.ndarray:
    """Row phases theta with build_qw(random coins) = diag(e^{-i theta}) build_walk_s.

    The coin phase of the departure site lands on the arrival row: up-row
    2j carries the up phase of site j-1, down-row 2j+1 the down phase of
    site j+1 (positions mod n_sites).
    """
    phases = np.asarray(phases, dtype=float)
    up, down = phases[0::2], phases[1::2]
    theta = np.empty(2 * n_sites)
    j = np.arange(n_sites)
    theta[2 * j] = up[(j - 1) % n_sites]
    theta[2 * j + 1] = down[(j + 1) % n_sites]
    return theta


def lambda0(t: float) -> float:
    """Half-width of the spectral arc of S(t): arccos(1 - 2 t^2)."""
    return float(np.arccos(np.clip(1.0 - 2.0 * t * t, -1.0, 1.0)))


def sd_spectrum_arcs(t: float, d: int = 1) -> ArcSet:
    """Spectrum of S_d(t): the arc of arguments in [-d lambda0, d lambda0]."""
    if not (0.0 <= t <= 1.0):
        raise ValueError(f"t must lie in [0,1], got {t}")
    return ArcSet.symmetric(d * lambda0(t))


def almost_sure_spectrum(t: float, d: int, beta: float):
    """Almost-sure spectrum arc for phase support [-beta, beta], plus the gap if any.

    Returns (sigma, gap, band_edges): the arc of arguments
    [-(d lambda0 + beta), d lambda0 + beta], the open complementary gap arc
    when beta + d lambda0 < pi (else None), and the two band-edge angles.
    """
    lam = d * lambda0(t)
    half = lam + beta
    sigma = ArcSet.symmetric(half)
    if half < np.pi:
        gap = ArcSet.interval(half, TWO_PI - half)
        edges = (half, TWO_PI - half)
        return sigma, gap, edges
    return sigma, None, None


def gamma_rephasing_diagonal(gammas: np.ndarray) -> np.ndarray:
    """Basis rephasing absorbing the block phases gamma_k: phi_k = gamma_1 + ... + gamma_k.

    Conjugating the block operator by diag(e^{i phi_k}) yields the operator
    with all gamma_k set to zero, entrywise.
    """
    gammas = np.asarray(gammas, dtype=float)
    phi = np.concatenate([[0.0], np.cumsum(gammas)])
    return np.exp(1j * phi)


@dataclass(frozen=True)
class ModelSpec:
    """Deterministic description of one model family plus its phase distribution."""

    family: str
    t: float = 0.5
    n: int = 64              # sites (band-1d, walk, magnetic ring) or coefficients (cmv)
    d: int = 1               # lattice dimension (anderson-d)
    ell: int = 8             # box side (anderson-d)
    r: float = 0.5           # Verblunsky modulus (cmv)
    closure: str = "periodic"
    dist: PhaseDistribution = field(default_factory=PhaseDistribution)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "cmv":
            if not (0.0 < self.r < 1.0):
                raise ValueError(f"cmv modulus must lie in (0,1), got {self.r}")
        elif not (0.0 <= self.t <= 1.0):
            raise ValueError(f"t must lie in [0,1], got {self.t}")
        if self.family == "anderson-d" and self.ell % 2 != 0:
            raise ValueError(f"anderson-d needs even box side, got {self.ell}")
        if self.family == "band-1d" and self.closure == "periodic" and self.n % 2 != 0:
            raise ValueError(f"band-1d periodic closure needs even n, got {self.n}")

    @property
    def dim(self) -> int:
        if self.family == "anderson-d":
            return self.ell ** self.d
        if self.family == "quantum-walk":
            return 2 * self.n
        return self.n

    @property
    def n_phases(self) -> int:
        if self.family == "quantum-walk":
            return 2 * self.n
        if self.family == "anderson-d":
            return self.ell ** self.d
        return self.n

    def deterministic_part(self) -> ComplexBandMatrix | None:
        """The fixed band factor S when the family decomposes as U = D S, else None."""
        if self.family == "band-1d":
            return build_band_s(self.t, self.n, closure=self.closure,
                                centered_labels=(self.closure == "periodic"))
        if self.family == "magnetic-ring-halfline":
            return build_band_s(self.t, self.n, closure="reflecting", centered_labels=False)
        if self.family == "anderson-d":
            return build_anderson_s(self.t, self.d, self.ell)
        if self.family == "quantum-walk":
            return build_walk_s(self.t, self.n)
        return None

    def phases(self, master_seed: int, realization_index: int) -> DisorderRealization:
        return sample_phases(self.dist, master_seed, realization_index, self.n_phases)

    def diag_phases(self, master_seed: int, realization_index: int) -> np.ndarray:
        """Row phases theta with U = diag(e^{-i theta}) S; None-families raise."""
        real = self.phases(master_seed, realization_index)
        if self.family == "quantum-walk":
            return walk_diag_phases(real.phases, self.n)
        if self.family == "cmv":
            raise ValueError("cmv does not factor as D S")
        return real.phases

    def build(self, master_seed: int, realization_index: int) -> ComplexBandMatrix:
        if self.family == "cmv":
            alphas = random_verblunsky(self.r, self.dist, master_seed,
                                       realization_index, self.n)
            return build_cmv(alphas, closure=True)
        s = self.deterministic_part()
        return apply_diag_phases(s, self.diag_phases(master_seed, realization_index))

    def to_config(self) -> dict:
        cfg = {"family": self.family, "dist": self.dist.to_config()}
        if self.family == "cmv":
            cfg["r"] = self.r
            cfg["n"] = self.n
        elif self.family == "anderson-d":
            cfg.update(t=self.t, d=self.d, L=self.ell)
        else:
            cfg.update(t=self.t, n=self.n)
            if self.family == "band-1d":
                cfg["closure"] = self.closure
        return cfg

    @classmethod
    def from_config(cls, cfg: dict) -> "ModelSpec":
        dist = PhaseDistribution.from_config(cfg.get("dist", {}))
        return cls(family=cfg["family"], t=cfg.get("t", 0.5), n=cfg.get("n", 64),
                   d=cfg.get("d", 1), ell=cfg.get("L", 8), r=cfg.get("r", 0.5),
                   closure=cfg.get("closure", "periodic"), dist=dist)


def model_from_spec(spec: ModelSpec, master_seed: int, realization_index: int) -> ComplexBandMatrix:
    return spec.build(master_seed, realization_index)
