"""Donaldson-Futaki scans over simple piecewise linear test configurations.

In two dimensions, K-polystability of (Delta, f, n) reduces to strict
positivity of the Donaldson-Futaki value on simple piecewise linear (sPL)
functions max{L, 0} whose crease {L = 0} meets the interior.  A crease is a
chord, so it is determined by its boundary endpoints u, v; we enumerate the
unordered pairs of edges carrying u and v (six cases on a quadrilateral),
parametrize each endpoint by lattice arc length on its edge, and scan DF
over a tensor grid per case, in both crease orientations max{+-L, 0}.

Grid nodes where the chord degenerates (u = v at a shared corner, or the
chord running along a boundary edge) are evaluated as their affine limits
and flagged; they carry no polystability information (DF vanishes on affine
functions at a critical potential) but keep the scan tables rectangular.

The verdict never claims polystability as a theorem: a finite grid plus a
local refinement of its minimum is evidence for strict positivity over the
parameter continuum, nothing more.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import minimize

from .errors import DomainError, ToleranceError
from .functionals import FunctionalContext, df_pair, futaki
from .polytope import AffineFn2, Polytope2, SPLFn
from .quadrature import DEFAULT_TOL

DEFAULT_GRID = 33


@dataclass(frozen=True)
class CreaseCase:
    """Chord endpoints on one unordered pair of edges.

    Endpoint parameters are lattice arc lengths from each edge's start
    vertex, so the parameter rectangle is [0, len_u] x [0, len_v].
    """

    polytope: Polytope2
    edge_pair: tuple
    param_ranges: tuple

    @property
    def case_id(self) -> str:
        return f"{self.edge_pair[0]}-{self.edge_pair[1]}"

    def endpoints(self, e: float, f: float):
        u = self.polytope.edge_point(self.edge_pair[0], e)
        v = self.polytope.edge_point(self.edge_pair[1], f)
        return u, v

    def build(self, e: float, f: float):
        """The sPL pair (max{L,0}, max{-L,0}) for the chord at (e, f).

        L vanishes on the chord through u and v and has unit gradient.
        Returns None when u = v (no chord direction).
        """
        u, v = self.endpoints(e, f)
        d = v - u
        norm = float(np.hypot(d[0], d[1]))
        if norm < 1e-12 * max(1.0, self.polytope.diameter()):
            return None
        grad = np.array([-d[1], d[0]]) / norm
        L = AffineFn2(float(grad[0]), float(grad[1]), float(-grad @ u))
        return (
            SPLFn.from_affine(L, self.polytope),
            SPLFn.from_affine(-L, self.polytope),
        )


def enumerate_crease_cases(polytope: Polytope2) -> list:
    """All C(edges, 2) crease cases in deterministic edge-index order."""
    cases = []
    for i, j in combinations(range(polytope.num_vertices), 2):
        ranges = (
            (0.0, polytope.edges[i].lattice_length),
            (0.0, polytope.edges[j].lattice_length),
        )
        cases.append(CreaseCase(polytope, (i, j), ranges))
    return cases


# ---------------------------------------------------------------------------
# scanning


@dataclass(frozen=True)
class ScanNode:
    e: float
    f: float
    df_pos: float
    df_neg: float
    valid: bool
    degenerate: bool


@dataclass
class ScanTable:
    """DF values of one crease case over the full tensor grid."""

    case_id: str
    edge_pair: tuple
    grid: int
    nodes: list
    tol: float

    def minimum(self):
        """(value, e, f, orientation) over all valid nodes, row order ties."""
        return self._min(include_degenerate=True)

    def interior_minimum(self):
        """Minimum over valid nodes with a genuine (nonempty-crease) chord."""
        return self._min(include_degenerate=False)

    def _min(self, include_degenerate: bool):
        best = None
        for node in self.nodes:
            if not node.valid or (node.degenerate and not include_degenerate):
                continue
            for value, orient in ((node.df_pos, "pos"), (node.df_neg, "neg")):
                if best is None or value < best[0]:
                    best = (value, node.e, node.f, orient)
        return best


def _affine_limit(ctx: FunctionalContext, spl: SPLFn) -> float:
    """DF of max{L, 0} when the crease misses the interior: L or 0 on all of Delta."""
    if spl.L.min_on(ctx.polytope) >= -1e-12 * max(1.0, ctx.polytope.diameter()):
        return futaki(ctx, spl.L)
    return 0.0


def _evaluate_node(ctx: FunctionalContext, case: CreaseCase, e: float, f: float):
    built = case.build(e, f)
    if built is None:
        # u = v: no chord direction, affine limit is direction-dependent; the
        # only orientation-free value is the zero function's
        return ScanNode(e, f, 0.0, 0.0, True, True)
    phi_pos, phi_neg = built
    try:
        if phi_pos.has_crease:
            pos, neg = df_pair(ctx, phi_pos)
            return ScanNode(e, f, pos, neg, True, False)
        return ScanNode(
            e, f, _affine_limit(ctx, phi_pos), _affine_limit(ctx, phi_neg), True, True
        )
    except ToleranceError:
        return ScanNode(e, f, math.nan, math.nan, False, False)


def df_scan(
    polytope: Polytope2,
    f: AffineFn2,
    n: float,
    case: CreaseCase,
    grid: int = DEFAULT_GRID,
    tol: float = DEFAULT_TOL,
    threads: int = 1,
) -> ScanTable:
    """DF over the case's full (e, f) tensor grid, both orientations.

    Node order is e-major (all f values for the first e, then the next e),
    which is also the CSV row order.  Quadrature failures mark the node
    invalid and the scan continues.
    """
    if grid < 2:
        raise DomainError("df_scan needs at least a 2x2 grid")
    ctx = FunctionalContext(polytope, f, n, tol)
    (e_lo, e_hi), (f_lo, f_hi) = case.param_ranges
    es = np.linspace(e_lo, e_hi, grid)
    fs = np.linspace(f_lo, f_hi, grid)
    pairs = [(ev, fv) for ev in es for fv in fs]
    # prime the shared moment cache once before any worker threads touch it
    futaki(ctx, AffineFn2(0.0, 0.0, 1.0))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            nodes = list(pool.map(lambda p: _evaluate_node(ctx, case, *p), pairs))
    else:
        nodes = [_evaluate_node(ctx, case, ev, fv) for ev, fv in pairs]
    return ScanTable(case.case_id, case.edge_pair, grid, nodes, tol)


def scan_csv_text(tables: list) -> str:
    """All tables as CSV rows `case,e,f,df_pos,df_neg,valid` (12 digits)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["case", "e", "f", "df_pos", "df_neg", "valid"])
    for table in tables:
        for node in table.nodes:
            writer.writerow(
                [
                    table.case_id,
                    f"{node.e:.12g}",
                    f"{node.f:.12g}",
                    f"{node.df_pos:.12g}",
                    f"{node.df_neg:.12g}",
                    1 if node.valid else 0,
                ]
            )
    return buf.getvalue()


def emit_scan_csv(tables: list, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(scan_csv_text(tables))


def read_scan_csv(path) -> dict:
    """Parse an emitted CSV back into {case_id: list of row dicts}."""
    out: dict = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rec = {
                "e": float(row["e"]),
                "f": float(row["f"]),
                "df_pos": float(row["df_pos"]),
                "df_neg": float(row["df_neg"]),
                "valid": row["valid"] == "1",
            }
            out.setdefault(row["case"], []).append(rec)
    return out


# ---------------------------------------------------------------------------
# verdict


@dataclass
class Verdict:
    status: str  # UNSTABLE | POLYSTABLE-EVIDENCE | INCONCLUSIVE
    message: str
    tol: float
    minimum: dict | None
    witness: dict | None
    tables: list = field(default_factory=list)


_EVIDENCE_TEXT = (
    "numerical evidence that DF > 0 on every simple piecewise linear test "
    "function with nonempty crease; by the two-dimensional reduction theorem "
    "this is the defining condition for K-polystability"
)


def _crease_height(case: CreaseCase, e: float, f: float) -> float:
    """Height of the smaller of the two pieces the chord cuts off.

    A collapsing crease (chord shrinking into a corner or hugging a boundary
    edge) always turns one side into a sliver, so this minimum over the two
    orientations tends to 0 exactly in the degenerate limits, where DF -> 0
    at a critical potential without carrying any instability information.
    """
    built = case.build(e, f)
    if built is None:
        return 0.0
    L = built[0].L
    values = [float(L(v)) for v in case.polytope.vertices]
    return min(max(values, default=0.0), -min(values, default=0.0))


def _refine_case_minimum(ctx, case, table, tol):
    """Local minimization of the weaker orientation from the grid minimum."""
    start = table.interior_minimum()
    if start is None:
        return None
    v0, e0, f0, orient = start
    (e_lo, e_hi), (f_lo, f_hi) = case.param_ranges

    def objective(x):
        built = case.build(float(x[0]), float(x[1]))
        if built is None or not built[0].has_crease:
            return math.inf  # affine limits carry no sPL information
        try:
            pos, neg = df_pair(ctx, built[0])
        except ToleranceError:
            return math.inf
        return pos if orient == "pos" else neg

    span = max(e_hi - e_lo, f_hi - f_lo)
    res = minimize(
        objective,
        x0=np.array([e0, f0]),
        method="Nelder-Mead",
        bounds=[(e_lo, e_hi), (f_lo, f_hi)],
        options={"xatol": 1e-6 * span, "fatol": 1e-14, "maxfev": 200},
    )
    value = float(res.fun) if np.isfinite(res.fun) else v0
    xs = (float(res.x[0]), float(res.x[1]))
    note = None
    if value > v0:  # refinement may only improve on the grid value
        value, xs = v0, (e0, f0)
    elif -tol <= value <= tol:
        # At a critical potential DF -> 0+ as the crease collapses, so a
        # near-zero refined value reached at a collapsing crease is the
        # known boundary limit, not evidence of a flat interior direction.
        height = _crease_height(case, *xs)
        if height < 1e-4 * case.polytope.diameter():
            value, xs = v0, (e0, f0)
            note = "refinement collapsed into the degenerate boundary; grid minimum kept"
    out = {
        "case": case.case_id,
        "value": float(value),
        "e": float(xs[0]),
        "f": float(xs[1]),
        "orientation": orient,
        "refined": True,
    }
    if note:
        out["note"] = note
    return out


def stability_verdict(
    polytope: Polytope2,
    f: AffineFn2,
    n: float,
    grid: int = DEFAULT_GRID,
    tol: float | None = None,
    threads: int = 1,
) -> Verdict:
    """Scan every crease case and classify (Delta, f, n).

    UNSTABLE: some valid node has DF < -tol (witness reported).
    POLYSTABLE-EVIDENCE: all genuine-crease values stay > tol, including the
    locally refined per-case minima, on a grid of at least 3 points per axis.
    INCONCLUSIVE: anything in between (minimum within [-tol, tol], or a grid
    too coarse to refine).
    """
    if polytope.vertices.shape[1] != 2:
        raise DomainError("the sPL reduction applies to two-dimensional polytopes only")
    cases = enumerate_crease_cases(polytope)
    ctx = FunctionalContext(polytope, f, n, DEFAULT_TOL)
    tables = [df_scan(polytope, f, n, c, grid, DEFAULT_TOL, threads) for c in cases]

    all_values = [
        abs(v)
        for t in tables
        for node in t.nodes
        if node.valid
        for v in (node.df_pos, node.df_neg)
    ]
    scale = max(all_values) if all_values else 1.0
    if tol is None:
        tol = 1e-7 * max(scale, 1e-30)

    # negative witness anywhere (affine limits included: a negative Futaki
    # value already contradicts semistability)
    witness = None
    for table in tables:
        for node in table.nodes:
            if not node.valid:
                continue
            for value, orient in ((node.df_pos, "pos"), (node.df_neg, "neg")):
                if value < -tol and (witness is None or value < witness["value"]):
                    witness = {
                        "case": table.case_id,
                        "value": float(value),
                        "e": float(node.e),
                        "f": float(node.f),
                        "orientation": orient,
                        "degenerate": node.degenerate,
                    }
    if witness is not None:
        return Verdict(
            "UNSTABLE",
            f"DF = {witness['value']:.6g} < -tol at case {witness['case']}, "
            f"(e, f) = ({witness['e']:.6g}, {witness['f']:.6g})",
            tol,
            None,
            witness,
            tables,
        )

    refined = [
        r
        for case, table in zip(cases, tables)
        if (r := _refine_case_minimum(ctx, case, table, tol)) is not None
    ]
    minimum = min(refined, key=lambda r: r["value"]) if refined else None

    if minimum is not None and minimum["value"] < -tol:
        return Verdict(
            "UNSTABLE",
            f"refined DF minimum {minimum['value']:.6g} < -tol at case {minimum['case']}",
            tol,
            minimum,
            minimum,
            tables,
        )
    if grid >= 3 and minimum is not None and minimum["value"] > tol:
        return Verdict(
            "POLYSTABLE-EVIDENCE",
            f"refined DF minimum {minimum['value']:.6g} > tol = {tol:.3g}; " + _EVIDENCE_TEXT,
            tol,
            minimum,
            None,
            tables,
        )
    reason = (
        "grid too coarse for evidence (need >= 3 points per axis)"
        if grid < 3
        else "DF minimum within +-tol of zero"
    )
    return Verdict("INCONCLUSIVE", reason, tol, minimum, None, tables)


def verdict_report(polytope: Polytope2, f: AffineFn2, n: float, verdict: Verdict) -> dict:
    """JSON-ready report of a full scan."""
    cases = []
    for table in verdict.tables:
        gm = table.minimum()
        im = table.interior_minimum()
        cases.append(
            {
                "case": table.case_id,
                "edge_pair": list(table.edge_pair),
                "grid": table.grid,
                "grid_minimum": None
                if gm is None
                else {"value": float(gm[0]), "e": float(gm[1]), "f": float(gm[2]), "orientation": gm[3]},
                "interior_minimum": None
                if im is None
                else {"value": float(im[0]), "e": float(im[1]), "f": float(im[2]), "orientation": im[3]},
                "degenerate_nodes": sum(1 for v in table.nodes if v.degenerate),
                "invalid_nodes": sum(1 for v in table.nodes if not v.valid),
            }
        )
    return {
        "polytope": {"vertices": [[float(x), float(y)] for x, y in polytope.vertices]},
        "f": [f.a, f.b, f.c],
        "n": n,
        "verdict": verdict.status,
        "message": verdict.message,
        "tol": verdict.tol,
        "minimum": verdict.minimum,
        "witness": verdict.witness,
        "cases": cases,
    }
