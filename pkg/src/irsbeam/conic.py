"""First-order solver for unit-diagonal PSD programs with gain floor/ceiling rows.

Solves, over a Hermitian matrix W and a scalar margin rho,

    maximize    Tr(C W) + f(rho)
    subject to  scale_p Tr(A_p W) >= weight_p * rho     (floor rows)
                scale_q Tr(A_q W) <= rho / delta        (ceiling rows)
                diag(W) = 1,  W >= 0 (PSD)

where f(rho) = 10 log10(rho) in "db" mode and, in "linear" mode,
rho_coeff * rho measured in units of rho's coherent upper bound (so the two
objective parts stay commensurate; the ``rho`` field of the solution is
always in raw units). The engine is an operator-splitting (ADMM) iteration:
one side projects onto the affine set (unit diagonal plus slack-completed
rows, through a cached Cholesky factor of A A^T), the other projects onto the
cone (eigenvalue clamping for the PSD block, interval work for the margin and
slacks). The dB objective is a set of tangent lines to the log curve kept
inside the margin coordinate's prox, so adding a tangent never changes the
affine factorization; tangents are refined until the envelope matches the
true log within ``cut_tol_db``.

Internally rows are normalized and rho is rescaled so all coordinates are
O(1); results are reported in raw units. The iteration is deterministic: no
randomness, fixed order, warm starts reproduce exactly.

Without floor rows rho carries no information and is pinned to 1 (ceiling
rows then cap gains at 1/delta and f contributes nothing).
"""

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InternalInvariantError

HERMITIAN_TOL = 1e-9
LOG10_SLOPE = 10.0 / np.log(10.0)
_SQRT2 = np.sqrt(2.0)


def _hermitize(A, name):
    """Symmetrize a nearly-Hermitian matrix, raising if the asymmetry is real."""
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{name} must be square, got shape {A.shape}")
    if not (np.all(np.isfinite(A.real)) and np.all(np.isfinite(A.imag))):
        raise InternalInvariantError(f"{name} contains non-finite entries")
    sym = 0.5 * (A + A.conj().T)
    err = np.max(np.abs(A - sym)) if A.size else 0.0
    if err > HERMITIAN_TOL * max(1.0, float(np.max(np.abs(A)))):
        raise InternalInvariantError(f"{name} is not Hermitian (asymmetry {err:.3e})")
    return sym


@dataclass(frozen=True)
class FloorRow:
    """Gain lower bound: scale * Tr(matrix @ W) >= weight * rho."""

    matrix: np.ndarray
    scale: float
    weight: float = 1.0


@dataclass(frozen=True)
class CeilingRow:
    """Gain upper bound: scale * Tr(matrix @ W) <= rho / delta."""

    matrix: np.ndarray
    scale: float


@dataclass(frozen=True)
class ConicProblem:
    """Problem data; coefficient matrices are symmetrized on construction."""

    n: int
    objective: np.ndarray = None  # Hermitian C, or None for zero
    floor_rows: tuple = ()
    ceiling_rows: tuple = ()
    delta: float = 1.0
    mode: str = "db"  # "db" | "linear"
    rho_coeff: float = 1.0

    def __post_init__(self):
        if self.mode not in ("db", "linear"):
            raise ValueError(f"unknown objective mode {self.mode!r}")
        if self.delta <= 0:
            raise ValueError("delta must be positive")
        if self.objective is not None:
            object.__setattr__(self, "objective", _hermitize(self.objective, "objective"))
        floors = []
        for i, row in enumerate(self.floor_rows):
            if row.scale <= 0 or row.weight <= 0:
                raise ValueError(f"floor row {i} needs positive scale and weight")
            floors.append(FloorRow(_hermitize(row.matrix, f"floor_rows[{i}]"),
                                   float(row.scale), float(row.weight)))
        ceils = []
        for i, row in enumerate(self.ceiling_rows):
            if row.scale <= 0:
                raise ValueError(f"ceiling row {i} needs a positive scale")
            ceils.append(CeilingRow(_hermitize(row.matrix, f"ceiling_rows[{i}]"),
                                    float(row.scale)))
        object.__setattr__(self, "floor_rows", tuple(floors))
        object.__setattr__(self, "ceiling_rows", tuple(ceils))


@dataclass(frozen=True)
class SolverOptions:
    residual_tol: float = 1e-6
    max_iters: int = 20000
    beta: float = 1.0
    over_relax: float = 1.6
    check_every: int = 100
    cut_tol_db: float = 1e-4
    max_cuts: int = 60
    psd_tol: float = 1e-6
    row_tol: float = 1e-6
    adapt_factor: float = 2.0
    adapt_ratio: float = 10.0
    beta_min: float = 1e-4
    beta_max: float = 1e4
    rho_floor_rel: float = 1e-9
    rho_cap_rel: float = 2.0


@dataclass
class ConicState:
    """Warm-start payload carried across solves with identical row structure."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    beta: float
    cut_points: tuple
    rho_scale: float
    signature: tuple


@dataclass
class ConicSolution:
    W: np.ndarray
    rho: float
    objective: float
    status: str  # "optimal" | "max_iters" | "infeasible"
    iterations: int
    cuts: int
    primal_residual: float
    dual_residual: float
    state: ConicState
    info: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Hermitian <-> real vector isometry

_INDEX_CACHE = {}


def _tri(n):
    if n not in _INDEX_CACHE:
        _INDEX_CACHE[n] = np.triu_indices(n, 1)
    return _INDEX_CACHE[n]


def hvec(A):
    """Isometric real vectorization of a Hermitian matrix.

    Stacks [diag; sqrt(2) Re(upper); sqrt(2) Im(upper)] so that
    hvec(A) @ hvec(B) = Tr(A B) exactly for Hermitian A, B.
    """
    iu = _tri(A.shape[0])
    upper = A[iu]
    return np.concatenate([A.diagonal().real, _SQRT2 * upper.real, _SQRT2 * upper.imag])


def hmat(x, n):
    """Inverse of ``hvec``: rebuild the Hermitian matrix."""
    iu = _tri(n)
    k = iu[0].size
    W = np.zeros((n, n), dtype=complex)
    W[iu] = (x[n:n + k] + 1j * x[n + k:n + 2 * k]) / _SQRT2
    W = W + W.conj().T
    W[np.diag_indices(n)] = x[:n]
    return W


# ---------------------------------------------------------------------------
# Public linear-algebra helpers (also used by the optimizer)

def project_psd(A):
    """Nearest PSD matrix in Frobenius norm: clamp negative eigenvalues."""
    A = _hermitize(A, "project_psd input")
    vals, vecs = np.linalg.eigh(A)
    if not np.all(np.isfinite(vals)):
        raise InternalInvariantError("eigendecomposition produced non-finite values")
    clipped = np.clip(vals, 0.0, None)
    return (vecs * clipped) @ vecs.conj().T


def dominant_eigvec(A):
    """Largest eigenpair (value, unit vector) of a Hermitian matrix.

    Raises on non-finite input or a nonpositive top eigenvalue (the convex
    majorizer is undefined at the zero matrix).
    """
    A = _hermitize(A, "dominant_eigvec input")
    vals, vecs = np.linalg.eigh(A)
    lam = float(vals[-1])
    if lam <= 0.0:
        raise ValueError(f"top eigenvalue {lam:.3e} is not positive")
    return lam, np.ascontiguousarray(vecs[:, -1])


def embed_real(A):
    """Real embedding [[Re, -Im], [Im, Re]] of a complex matrix."""
    A = np.asarray(A, dtype=complex)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def embed_problem(problem):
    """Reference real-symmetric double of a problem (same optimal value).

    Coefficient matrices map as A -> embed_real(A)/2 so every trace term is
    preserved; the PSD cone and unit diagonal carry over. Used in tests to
    cross-check the complex path.
    """
    def lift(A):
        return embed_real(A) / 2.0

    return ConicProblem(
        n=2 * problem.n,
        objective=None if problem.objective is None else lift(problem.objective),
        floor_rows=tuple(FloorRow(lift(r.matrix), r.scale, r.weight)
                         for r in problem.floor_rows),
        ceiling_rows=tuple(CeilingRow(lift(r.matrix), r.scale)
                           for r in problem.ceiling_rows),
        delta=problem.delta,
        mode=problem.mode,
        rho_coeff=problem.rho_coeff,
    )


def verify_solution(problem, W, rho, tol=1e-6):
    """Check a candidate (W, rho) against the problem contract in raw units.

    Returns a dict with the worst relative violations (diagonal, PSD, floor
    and ceiling rows) and an ``ok`` flag at the given tolerance.
    """
    diag_err = float(np.max(np.abs(np.diagonal(W).real - 1.0)))
    vals = np.linalg.eigvalsh(W)
    lam_max = float(vals[-1])
    min_eig_rel = float(vals[0]) / max(1.0, lam_max)
    floor_rel = 0.0
    for row in problem.floor_rows:
        lhs = row.scale * float(np.tensordot(row.matrix, W, axes=([0, 1], [1, 0])).real)
        rhs = row.weight * rho
        floor_rel = max(floor_rel, (rhs - lhs) / max(1.0, abs(lhs), abs(rhs)))
    ceil_rel = 0.0
    for row in problem.ceiling_rows:
        lhs = row.scale * float(np.tensordot(row.matrix, W, axes=([0, 1], [1, 0])).real)
        rhs = rho / problem.delta
        ceil_rel = max(ceil_rel, (lhs - rhs) / max(1.0, abs(lhs), abs(rhs)))
    ok = (diag_err <= tol and min_eig_rel >= -tol
          and floor_rel <= tol and ceil_rel <= tol)
    return {"ok": bool(ok), "diag_err": diag_err, "min_eig_rel": min_eig_rel,
            "floor_violation_rel": floor_rel, "ceiling_violation_rel": ceil_rel}


# ---------------------------------------------------------------------------
# Problem serialization (debug dumps consumed by tests and bug reports)

def _mat_to_json(A):
    if A is None:
        return None
    A = np.asarray(A, dtype=complex)
    return {"re": A.real.tolist(), "im": A.imag.tolist()}


def _mat_from_json(obj):
    if obj is None:
        return None
    return np.array(obj["re"], dtype=float) + 1j * np.array(obj["im"], dtype=float)


def dump_problem(problem, path):
    """Write the full problem data as JSON (floats survive exactly)."""
    payload = {
        "n": problem.n,
        "mode": problem.mode,
        "delta": problem.delta,
        "rho_coeff": problem.rho_coeff,
        "objective": _mat_to_json(problem.objective),
        "floor_rows": [{"matrix": _mat_to_json(r.matrix), "scale": r.scale,
                        "weight": r.weight} for r in problem.floor_rows],
        "ceiling_rows": [{"matrix": _mat_to_json(r.matrix), "scale": r.scale}
                         for r in problem.ceiling_rows],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)


def load_problem(path):
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    return ConicProblem(
        n=int(payload["n"]),
        objective=_mat_from_json(payload["objective"]),
        floor_rows=tuple(FloorRow(_mat_from_json(r["matrix"]), r["scale"], r["weight"])
                         for r in payload["floor_rows"]),
        ceiling_rows=tuple(CeilingRow(_mat_from_json(r["matrix"]), r["scale"])
                           for r in payload["ceiling_rows"]),
        delta=float(payload["delta"]),
        mode=payload["mode"],
        rho_coeff=float(payload["rho_coeff"]),
    )


# ---------------------------------------------------------------------------
# The splitting engine

class _Workspace:
    """Prebuilt affine system, index layout, and prox data for one problem."""

    def __init__(self, problem, options):
        self.problem = problem
        self.options = options
        n = problem.n
        n_p = len(problem.floor_rows)
        n_q = len(problem.ceiling_rows)
        self.n = n
        self.n_p = n_p
        self.n_q = n_q
        self.dim_w = n * n
        self.size = self.dim_w + 1 + n_p + n_q
        self.idx_rho = self.dim_w
        self.sl_u = slice(self.dim_w + 1, self.dim_w + 1 + n_p)
        self.sl_v = slice(self.dim_w + 1 + n_p, self.size)
        self.has_rho = n_p > 0

        # margin rescaling: coherent bound over n, so the scaled margin is O(n)
        if self.has_rho:
            self.rho_scale = min(
                row.scale * float(np.linalg.norm(row.matrix)) / row.weight
                for row in problem.floor_rows)
            if self.rho_scale <= 0:
                raise InternalInvariantError("floor rows give a nonpositive margin scale")
            self.rho_lo = options.rho_floor_rel * max(n, 1)
            self.rho_hi = options.rho_cap_rel * max(n, 1)
        else:
            self.rho_scale = 1.0
            self.rho_lo = self.rho_hi = 1.0

        # affine rows: diag block, floor rows (slack -1), ceiling rows (+1);
        # the (W, rho) part of each gain row is normalized, slacks stay unit
        m = n + n_p + n_q
        A = np.zeros((m, self.size))
        b = np.zeros(m)
        A[np.arange(n), np.arange(n)] = 1.0
        b[:n] = 1.0
        self.floor_vec = np.empty((n_p, self.dim_w))
        self.floor_rhs = np.empty(n_p)  # weight * rho_scale, raw units
        self.floor_norm = np.empty(n_p)
        for i, row in enumerate(problem.floor_rows):
            vec = row.scale * hvec(row.matrix)
            rho_coef = row.weight * self.rho_scale
            norm = float(np.sqrt(vec @ vec + rho_coef ** 2))
            r = n + i
            A[r, :self.dim_w] = vec / norm
            A[r, self.idx_rho] = -rho_coef / norm
            A[r, self.dim_w + 1 + i] = -1.0
            self.floor_vec[i] = vec
            self.floor_rhs[i] = rho_coef
            self.floor_norm[i] = norm
        self.ceil_vec = np.empty((n_q, self.dim_w))
        self.ceil_norm = np.empty(n_q)
        rho_coef_q = self.rho_scale / problem.delta
        for i, row in enumerate(problem.ceiling_rows):
            vec = row.scale * hvec(row.matrix)
            norm = float(np.sqrt(vec @ vec + rho_coef_q ** 2))
            r = n + n_p + i
            A[r, :self.dim_w] = vec / norm
            A[r, self.idx_rho] = -rho_coef_q / norm
            A[r, self.dim_w + 1 + n_p + i] = 1.0
            self.ceil_vec[i] = vec
            self.ceil_norm[i] = norm
        self.A = A
        self.b = b
        self.chol = cho_factor(A @ A.T + 1e-12 * np.eye(m), lower=True)

        # objective: minimize c @ x, the margin term lives in the cone prox
        c = np.zeros(self.size)
        obj_norm = 0.0
        if problem.objective is not None:
            cw = hvec(problem.objective)
            obj_norm = float(np.linalg.norm(cw))
            c[:self.dim_w] = -cw
        self.omega = 1.0 / max(1.0, obj_norm)
        self.c = c * self.omega
        self.lines = None

    def project_affine(self, w):
        resid = self.A @ w - self.b
        return w - self.A.T @ cho_solve(self.chol, resid)

    # -- objective lines on the scaled margin coordinate ---------------------
    def build_lines(self, cut_points):
        """Rebuild (slope, intercept, seg_lo, seg_hi) for the concave envelope."""
        if not self.has_rho:
            self.lines = None
            return
        if self.problem.mode == "linear":
            alpha = np.array([self.problem.rho_coeff])
            intercept = np.array([0.0])
        else:
            pts = np.array(sorted(cut_points))
            alpha = LOG10_SLOPE / pts
            intercept = 10.0 * np.log10(self.rho_scale * pts) - LOG10_SLOPE
        if alpha.size > 1:
            # tangents to a concave curve are all active; breakpoints sit
            # between consecutive tangent points
            cross = (intercept[1:] - intercept[:-1]) / (alpha[:-1] - alpha[1:])
            lo = np.concatenate([[self.rho_lo], cross])
            hi = np.concatenate([cross, [self.rho_hi]])
        else:
            lo = np.array([self.rho_lo])
            hi = np.array([self.rho_hi])
        keep = hi > lo
        self.lines = (alpha[keep], intercept[keep],
                      np.clip(lo[keep], self.rho_lo, self.rho_hi),
                      np.clip(hi[keep], self.rho_lo, self.rho_hi))

    def envelope_db(self, r):
        """Envelope value at scaled margin r (raw dB units, db mode only)."""
        alpha, intercept, _, _ = self.lines
        return float(np.min(alpha * r + intercept))

    def prox_rho(self, p, beta_pen):
        """argmin over the box of -omega*envelope(r) + beta/2 (r-p)^2."""
        if not self.has_rho:
            return 1.0
        if self.lines is None:
            return min(max(p, self.rho_lo), self.rho_hi)
        alpha, intercept, lo, hi = self.lines
        cand = np.clip(p + self.omega * alpha / beta_pen, lo, hi)
        value = (-self.omega * (alpha * cand + intercept)
                 + 0.5 * beta_pen * (cand - p) ** 2)
        return float(cand[np.argmin(value)])

    def project_cone(self, w, beta_pen):
        z = w.copy()
        W = hmat(w[:self.dim_w], self.n)
        vals, vecs = np.linalg.eigh(W)
        np.clip(vals, 0.0, None, out=vals)
        z[:self.dim_w] = hvec((vecs * vals) @ vecs.conj().T)
        z[self.idx_rho] = self.prox_rho(w[self.idx_rho], beta_pen)
        np.clip(w[self.sl_u], 0.0, None, out=z[self.sl_u])
        np.clip(w[self.sl_v], 0.0, None, out=z[self.sl_v])
        return z

    # -- raw-unit checks ------------------------------------------------------
    def raw_rows_ok(self, wvec, rho, tol):
        if self.n_p:
            lhs = self.floor_vec @ wvec
            rhs = self.floor_rhs * (rho / self.rho_scale)
            scale = np.maximum(1.0, np.maximum(np.abs(lhs), np.abs(rhs)))
            if np.any((rhs - lhs) / scale > tol):
                return False
        if self.n_q:
            lhs = self.ceil_vec @ wvec
            rhs = rho / self.problem.delta
            scale = np.maximum(1.0, np.maximum(np.abs(lhs), abs(rhs)))
            if np.any((lhs - rhs) / scale > tol):
                return False
        return True

    def certificate(self, wvec):
        """(ceiling, floor) bracket on the raw margin implied by a W iterate."""
        ceiling = np.inf
        if self.n_p:
            ceiling = float(np.min(self.floor_vec @ wvec
                                   / (self.floor_rhs / self.rho_scale)))
        floor = 0.0
        if self.n_q:
            floor = float(np.max(self.ceil_vec @ wvec) * self.problem.delta)
        return ceiling, floor


def _initial_point(ws, init_W):
    x = np.zeros(ws.size)
    if init_W is not None:
        x[:ws.dim_w] = hvec(np.asarray(init_W, dtype=complex))
    else:
        x[:ws.n] = 1.0  # identity matrix
    if ws.has_rho:
        wvec = x[:ws.dim_w]
        implied = float(np.min(ws.floor_vec @ wvec / ws.floor_rhs))
        x[ws.idx_rho] = min(max(implied, ws.rho_lo), ws.rho_hi)
    else:
        x[ws.idx_rho] = 1.0
    if ws.n_p:
        x[ws.sl_u] = (ws.floor_vec @ x[:ws.dim_w]
                      - ws.floor_rhs * x[ws.idx_rho]) / ws.floor_norm
    if ws.n_q:
        x[ws.sl_v] = (ws.rho_scale * x[ws.idx_rho] / ws.problem.delta
                      - ws.ceil_vec @ x[:ws.dim_w]) / ws.ceil_norm
    return x


def _default_cuts(ws):
    if ws.problem.mode != "db" or not ws.has_rho:
        return ()
    top = float(max(ws.n, 1))
    return tuple(top * s for s in (0.01, 0.0316, 0.1, 0.316, 1.0))


def solve(problem, options=None, state=None, init_W=None, dump_path=None):
    """Run the splitting iteration until the solution contract holds.

    ``state`` warm-starts from a previous solve with the same row structure
    (the usual case along a majorize-minimize sequence, where only the
    objective matrix changes); ``init_W`` seeds just the matrix block.
    ``dump_path`` writes the problem as JSON before solving.
    """
    options = options or SolverOptions()
    if dump_path is not None:
        dump_problem(problem, dump_path)
    ws = _Workspace(problem, options)

    signature = (problem.n, len(problem.floor_rows), len(problem.ceiling_rows),
                 problem.mode)
    if (state is not None and state.signature == signature
            and abs(state.rho_scale - ws.rho_scale) <= 1e-9 * abs(ws.rho_scale)):
        x = state.x.copy()
        z = state.z.copy()
        y = state.y.copy()
        beta = float(state.beta)
        cut_points = list(state.cut_points)
    else:
        x = _initial_point(ws, init_W)
        z = x.copy()
        y = np.zeros(ws.size)
        beta = options.beta
        cut_points = list(_default_cuts(ws))
    ws.build_lines(cut_points)

    alpha_r = options.over_relax
    tol = options.residual_tol
    iters = 0
    r_norm = s_norm = np.inf
    status = "max_iters"
    cert_streak = 0
    pinned_level = 3.0 * ws.rho_lo
    settle_until = 0
    stall_streak = 0
    last_r = np.inf

    while iters < options.max_iters:
        x = ws.project_affine(z - y - ws.c / beta)
        x_hat = alpha_r * x + (1.0 - alpha_r) * z
        z_prev = z
        z = ws.project_cone(x_hat + y, beta)
        y = y + x_hat - z
        iters += 1

        r_norm = float(np.linalg.norm(x - z))
        s_norm = beta * float(np.linalg.norm(z - z_prev))
        eps_pri = tol * max(1.0, float(np.linalg.norm(x)), float(np.linalg.norm(z)))
        eps_dual = tol * max(1.0, beta * float(np.linalg.norm(y)))
        converged = r_norm <= eps_pri and s_norm <= eps_dual

        if not converged and iters % options.check_every:
            continue

        # infeasibility heuristic: margin pinned at its floor while the
        # ceiling implied by the floor rows sits below the ceiling-row floor
        if ws.has_rho and ws.n_q and z[ws.idx_rho] <= pinned_level:
            ceiling, floor = ws.certificate(z[:ws.dim_w])
            cert_streak = cert_streak + 1 if floor > ceiling else 0
            if cert_streak >= 10:
                status = "infeasible"
                break
        else:
            cert_streak = 0

        # second infeasibility signature: the iteration converges to the
        # minimal-distance pair between the affine set and the cone (primal
        # residual frozen at a positive value, dual residual vanished); the
        # cone-side matrix then witnesses the separation pinch
        if iters % options.check_every == 0:
            stalled = (r_norm > 10.0 * eps_pri and s_norm <= 1e-3 * r_norm
                       and abs(r_norm - last_r) <= 1e-4 * max(r_norm, 1e-30))
            stall_streak = stall_streak + 1 if stalled else 0
            last_r = r_norm
            if stall_streak >= 5 and ws.has_rho and ws.n_q:
                ceiling, floor = ws.certificate(z[:ws.dim_w])
                if floor >= ceiling * (1.0 - 1e-9):
                    status = "infeasible"
                    break

        if not converged:
            # residual balancing, scaled dual kept continuous across changes
            if r_norm > options.adapt_ratio * s_norm and beta < options.beta_max:
                new_beta = beta * options.adapt_factor
                y *= beta / new_beta
                beta = new_beta
            elif s_norm > options.adapt_ratio * r_norm and beta > options.beta_min:
                new_beta = beta / options.adapt_factor
                y *= beta / new_beta
                beta = new_beta
            continue
        if iters < settle_until:
            continue

        # residuals pass; confirm the raw contract on the affine-side point
        rho_raw = ws.rho_scale * float(x[ws.idx_rho]) if ws.has_rho else 1.0
        W_cand = hmat(x[:ws.dim_w], ws.n)
        vals = np.linalg.eigvalsh(W_cand)
        psd_ok = vals[0] >= -options.psd_tol * max(1.0, float(vals[-1]))
        rows_ok = ws.raw_rows_ok(x[:ws.dim_w], rho_raw, options.row_tol)
        if not (psd_ok and rows_ok):
            tol = tol / 2.0  # contract is stricter than the residuals; tighten
            continue

        # dB-mode outer loop: refine the log envelope at the converged margin
        if problem.mode == "db" and ws.has_rho:
            r_star = float(x[ws.idx_rho])
            point = max(r_star, 1e-6 * ws.n)
            gap = (ws.envelope_db(max(r_star, ws.rho_lo))
                   - 10.0 * np.log10(ws.rho_scale * max(r_star, ws.rho_lo)))
            if (gap > options.cut_tol_db and len(cut_points) < options.max_cuts
                    and all(abs(point - c) > 1e-9 * max(point, c) for c in cut_points)):
                cut_points.append(point)
                ws.build_lines(cut_points)
                # force fresh iterations so termination reflects the new envelope
                settle_until = iters + options.check_every
                continue
        status = "optimal"
        break

    # report the affine-side point: diagonal and rows hold exactly there
    rho_raw = ws.rho_scale * float(x[ws.idx_rho]) if ws.has_rho else 1.0
    W = hmat(x[:ws.dim_w], ws.n)
    if (status != "infeasible" and ws.has_rho and ws.n_q
            and z[ws.idx_rho] <= pinned_level):
        ceiling, floor = ws.certificate(x[:ws.dim_w])
        if floor > ceiling and (status == "optimal" or cert_streak >= 3):
            status = "infeasible"

    obj = 0.0
    if problem.objective is not None:
        obj += float(np.tensordot(problem.objective, W, axes=([0, 1], [1, 0])).real)
    info = {"beta": beta, "omega": ws.omega}
    if ws.has_rho:
        if problem.mode == "db":
            safe_rho = max(rho_raw, ws.rho_scale * ws.rho_lo)
            obj += 10.0 * np.log10(safe_rho)
            info["gap_db"] = (ws.envelope_db(max(float(x[ws.idx_rho]), ws.rho_lo))
                              - 10.0 * np.log10(safe_rho))
        else:
            obj += problem.rho_coeff * rho_raw / ws.rho_scale
    info["verify"] = verify_solution(problem, W, rho_raw,
                                     max(options.row_tol, options.psd_tol))
    if status == "infeasible":
        ceiling, floor = ws.certificate(z[:ws.dim_w])
        info["certificate"] = (
            f"no positive margin fits: the tightest floor row caps rho at "
            f"{ceiling:.6g} while the ceiling rows force rho >= {floor:.6g}")

    new_state = ConicState(x=x, z=z, y=y, beta=beta, cut_points=tuple(cut_points),
                           rho_scale=ws.rho_scale, signature=signature)
    return ConicSolution(W=W, rho=rho_raw, objective=float(obj), status=status,
                         iterations=iters, cuts=len(cut_points),
                         primal_residual=r_norm, dual_residual=s_norm,
                         state=new_state, info=info)
