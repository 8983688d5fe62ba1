"""Learning a bound predicate from labeled search states.

The constraint space is a single linear inequality over the quadratic term
expansion of the feature vector: continue-states (positives) must satisfy
sum_j w_j t_j(x) <= c0, bound-states (negatives) should violate it. The
general encoding (I simultaneous constraints, big-M coverage selectors,
binary S_li) is built for export to external MILP solvers; the internal
solver handles the deployed I=1 case as box-bounded linear separation with
a hard guarantee on positives and greedy coverage maximization on negatives.
"""

from __future__ import annotations

import json
import re
import time
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from scipy.optimize import linprog
from scipy.sparse import (
    csr_matrix,
    eye as sparse_eye,
    hstack as sparse_hstack,
    vstack as sparse_vstack,
)

from .errors import ModelFormatError, NoModelError, UnsupportedProblemError
from .features import Example, FeatureVector

DEFAULT_BIG_M = 1e6
DEFAULT_EPSILON = 1e-6
WEIGHT_BOX = 1000.0
MODEL_SCHEMA_VERSION = 1

# Internal-solver knobs: single-LP size threshold before switching to
# row generation, rows added per generation round, the share of violating
# negatives dropped per soft-mode round, the largest unique-negative set
# the soft LP optimizes over directly, and the example count above which
# exact evaluation passes use a numpy prefilter.
_DIRECT_ROW_LIMIT = 20_000
_GENERATION_CHUNK = 4096
_DROP_SHARE = 5
_SOFT_WORKING_LIMIT = 20_000
_EXACT_PASS_LIMIT = 50_000
_VECTORIZE_THRESHOLD = 5_000


def _make_terms(n: int) -> tuple[tuple[int, ...], ...]:
    linear = [(i,) for i in range(n)]
    quad = [(i, j) for i in range(n) for j in range(i, n)]
    return tuple(linear + quad)


@dataclass(frozen=True)
class TermSpec:
    """Monomial layout: n linear terms ascending, then x_i*x_j for i <= j in
    lexicographic order — n + n(n+1)/2 terms total."""

    n: int
    terms: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"feature dimension must be >= 1, got {self.n}")
        object.__setattr__(self, "terms", _make_terms(self.n))

    @property
    def num_terms(self) -> int:
        return len(self.terms)

    def term_names(self) -> list[str]:
        return [
            f"x{t[0]}" if len(t) == 1 else f"x{t[0]}*x{t[1]}" for t in self.terms
        ]


def expand_terms(spec: TermSpec, x) -> list:
    """Evaluate the monomials on x (a FeatureVector or plain sequence)."""
    vals = x.values() if isinstance(x, FeatureVector) else list(x)
    if len(vals) != spec.n:
        raise ValueError(f"expected {spec.n} features, got {len(vals)}")
    out = []
    for t in spec.terms:
        if len(t) == 1:
            out.append(vals[t[0]])
        else:
            out.append(vals[t[0]] * vals[t[1]])
    return out


def _expand_matrix(spec: TermSpec, feats: np.ndarray) -> np.ndarray:
    """Vectorized expand_terms over the rows of an (N, n) float64 matrix.

    Feature values and their pairwise products stay far below 2**53, so the
    float64 columns equal the scalar expansion exactly.
    """
    cols = [feats]
    for i in range(spec.n):
        for j in range(i, spec.n):
            cols.append((feats[:, i] * feats[:, j])[:, None])
    return np.hstack(cols)


def dot_terms(weights: Sequence[float], terms: Sequence[float]) -> float:
    """The model's decision value. solve() and model_bounds() share this
    exact accumulation so the hard positive guarantee survives replay."""
    total = 0.0
    for w, t in zip(weights, terms):
        total += w * t
    return total


@dataclass
class MilpProblem:
    """Encoded learning instance (constraint rows are generated on demand).

    Row order is fixed: positives (by input order, constraints inner), then
    negatives, then one coverage row per negative.
    """

    term_spec: TermSpec
    num_constraints: int
    pos_terms: "Sequence[Sequence[float]]"  # list of rows, or an (N, T) array
    neg_terms: "Sequence[Sequence[float]]"
    big_m: float = DEFAULT_BIG_M
    epsilon: float = DEFAULT_EPSILON
    box: float = WEIGHT_BOX

    @property
    def num_rows(self) -> int:
        ex = len(self.pos_terms) + len(self.neg_terms)
        return self.num_constraints * ex + len(self.neg_terms)

    @property
    def num_continuous(self) -> int:
        return self.num_constraints * (self.term_spec.num_terms + 1)

    @property
    def num_binary(self) -> int:
        return len(self.neg_terms) * self.num_constraints

    def iter_rows(self) -> Iterator[tuple[str, dict[str, float], str, float]]:
        """Yields (name, coefficients, sense, rhs) with c_i moved to the LHS.

        Positives:  sum_j w_ij t_j - c_i <= 0
        Negatives:  sum_j w_ij t_j - M*S_li - c_i >= -M + epsilon
        Coverage:   sum_i S_li >= 1
        """
        I = self.num_constraints
        for e, row in enumerate(self.pos_terms):
            for i in range(I):
                coeffs = {f"w_{i}_{j}": v for j, v in enumerate(row) if v != 0}
                coeffs[f"c_{i}"] = -1.0
                yield (f"pos_{e}_{i}", coeffs, "<=", 0.0)
        for l, row in enumerate(self.neg_terms):
            for i in range(I):
                coeffs = {f"w_{i}_{j}": v for j, v in enumerate(row) if v != 0}
                coeffs[f"S_{l}_{i}"] = -self.big_m
                coeffs[f"c_{i}"] = -1.0
                yield (f"neg_{l}_{i}", coeffs, ">=", -self.big_m + self.epsilon)
        for l in range(len(self.neg_terms)):
            coeffs = {f"S_{l}_{i}": 1.0 for i in range(I)}
            yield (f"cover_{l}", coeffs, ">=", 1.0)

    def variable_names(self) -> tuple[list[str], list[str]]:
        """(continuous, binary) in declaration order."""
        I = self.num_constraints
        T = self.term_spec.num_terms
        cont = [f"w_{i}_{j}" for i in range(I) for j in range(T)]
        cont += [f"c_{i}" for i in range(I)]
        binary = [f"S_{l}_{i}" for l in range(len(self.neg_terms)) for i in range(I)]
        return cont, binary


def encode_milp(
    examples: Sequence[Example],
    num_constraints: int = 1,
    big_m: float = DEFAULT_BIG_M,
    epsilon: float = DEFAULT_EPSILON,
) -> MilpProblem:
    """Expand examples and lay out the rows per MilpProblem."""
    if not examples:
        raise ValueError("cannot encode an empty example list")
    if num_constraints < 1:
        raise ValueError(f"num_constraints must be >= 1, got {num_constraints}")
    dims = set()
    for ex in examples:
        f = ex.features
        dims.add(len(f.values()) if isinstance(f, FeatureVector) else len(f))
    if len(dims) != 1:
        raise ValueError(f"mixed feature dimensions: {sorted(dims)}")
    spec = TermSpec(dims.pop())
    if len(examples) > _VECTORIZE_THRESHOLD:
        feats = np.empty((len(examples), spec.n), dtype=float)
        labels = np.empty(len(examples), dtype=bool)
        for r, ex in enumerate(examples):
            f = ex.features
            feats[r, :] = f.values() if isinstance(f, FeatureVector) else list(f)
            labels[r] = bool(ex.label)
        terms = _expand_matrix(spec, feats)
        pos_terms = terms[labels]
        neg_terms = terms[~labels]
    else:
        pos_terms = [expand_terms(spec, ex.features) for ex in examples if ex.label]
        neg_terms = [expand_terms(spec, ex.features) for ex in examples if not ex.label]
    return MilpProblem(
        term_spec=spec,
        num_constraints=num_constraints,
        pos_terms=pos_terms,
        neg_terms=neg_terms,
        big_m=big_m,
        epsilon=epsilon,
    )


# ---------------------------------------------------------------- LP format


def _fmt(v) -> str:
    f = float(v)
    if f == int(f) and abs(f) < 1e15:
        return str(int(f))
    return repr(f)


def _fmt_expr(coeffs: dict[str, float]) -> str:
    parts = []
    for name, v in coeffs.items():
        if not parts:
            parts.append(f"{_fmt(v)} {name}" if v >= 0 else f"- {_fmt(-v)} {name}")
        else:
            sign = "+" if v >= 0 else "-"
            parts.append(f"{sign} {_fmt(abs(v))} {name}")
    return " ".join(parts)


def export_lp(p: MilpProblem, path, soft: bool = False) -> None:
    """Write the encoding in LP text format.

    Hard mode (default): feasibility objective "Maximize 0" with the
    every-negative-covered rows. Soft mode: maximize covered negatives via
    binary z_l <= sum_i S_li indicators and no coverage rows (the objective
    used by solve's soft phase).
    """
    I = p.num_constraints
    cont, binary = p.variable_names()
    lines = ["\\ constraint-learning encoding", "Maximize"]
    if soft:
        zs = [f"z_{l}" for l in range(len(p.neg_terms))]
        lines.append(" obj: " + (" + ".join(zs) if zs else f"0 {cont[0]}"))
    else:
        lines.append(f" obj: 0 {cont[0]}")
    lines.append("Subject To")
    for name, coeffs, sense, rhs in p.iter_rows():
        if soft and name.startswith("cover_"):
            continue
        lines.append(f" {name}: {_fmt_expr(coeffs)} {sense} {_fmt(rhs)}")
    if soft:
        for l in range(len(p.neg_terms)):
            coeffs = {f"z_{l}": 1.0}
            for i in range(I):
                coeffs[f"S_{l}_{i}"] = -1.0
            lines.append(f" link_{l}: {_fmt_expr(coeffs)} <= 0")
    lines.append("Bounds")
    for name in cont:
        lines.append(f" {_fmt(-p.box)} <= {name} <= {_fmt(p.box)}")
    binaries = list(binary)
    if soft:
        binaries += [f"z_{l}" for l in range(len(p.neg_terms))]
    if binaries:
        lines.append("Binaries")
        for name in binaries:
            lines.append(f" {name}")
    lines.append("End")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


@dataclass
class ParsedLp:
    sense: str
    objective: dict[str, float]
    rows: list[tuple[str, dict[str, float], str, float]]
    bounds: dict[str, tuple[float | None, float | None]]
    binaries: set[str]

    @property
    def variables(self) -> set[str]:
        seen = set(self.objective)
        for _, coeffs, _, _ in self.rows:
            seen.update(coeffs)
        seen.update(self.bounds)
        seen.update(self.binaries)
        return seen


_TOKEN_RE = re.compile(r"<=|>=|=<|=>|[<>=:+-]|[A-Za-z_][A-Za-z0-9_.]*|[0-9.]+(?:[eE][+-]?[0-9]+)?")
_SECTION_WORDS = {
    "maximize": "objective",
    "maximum": "objective",
    "max": "objective",
    "minimize": "objective",
    "minimum": "objective",
    "min": "objective",
    "subject": "rows",
    "st": "rows",
    "bounds": "bounds",
    "bound": "bounds",
    "binaries": "binaries",
    "binary": "binaries",
    "bin": "binaries",
    "general": "general",
    "generals": "general",
    "end": "end",
}


def _parse_expr(tokens: list[str], pos: int) -> tuple[dict[str, float], int]:
    """Parse [sign] [coef] var ... until a relational token; implicit '+'."""
    coeffs: dict[str, float] = {}
    sign = 1.0
    coef: float | None = None
    while pos < len(tokens):
        tok = tokens[pos]
        if tok in ("<=", ">=", "=", "<", ">", "=<", "=>"):
            break
        if tok == "+":
            sign, coef = 1.0, None
        elif tok == "-":
            sign, coef = -1.0, None
        elif _is_number(tok):
            coef = float(tok) if coef is None else coef * float(tok)
        else:
            value = sign * (1.0 if coef is None else coef)
            coeffs[tok] = coeffs.get(tok, 0.0) + value
            sign, coef = 1.0, None
        pos += 1
    return coeffs, pos


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def read_lp(path) -> ParsedLp:
    """Minimal LP-format reader covering what export_lp emits (named rows,
    one per line; bounds as "lo <= var <= hi"; Binaries section)."""
    sense = "maximize"
    objective: dict[str, float] = {}
    rows: list[tuple[str, dict[str, float], str, float]] = []
    bounds: dict[str, tuple[float | None, float | None]] = {}
    binaries: set[str] = set()
    section = None
    with open(path, "r", encoding="utf-8") as fh:
        raw_lines = fh.read().splitlines()
    for raw in raw_lines:
        line = raw.split("\\")[0].strip()
        if not line:
            continue
        first = line.split()[0].lower().rstrip(":")
        if first in _SECTION_WORDS:
            kind = _SECTION_WORDS[first]
            if kind == "objective":
                sense = "minimize" if first.startswith("min") else "maximize"
                section = "objective"
                continue
            if kind == "end":
                break
            section = kind
            continue
        tokens = _TOKEN_RE.findall(line)
        if not tokens:
            continue
        if section == "objective":
            pos = 0
            if len(tokens) > 1 and tokens[1] == ":":
                pos = 2
            coeffs, _ = _parse_expr(tokens, pos)
            for k, v in coeffs.items():
                objective[k] = objective.get(k, 0.0) + v
        elif section == "rows":
            if len(tokens) < 2 or tokens[1] != ":":
                raise ValueError(f"unnamed constraint row: {line!r}")
            name = tokens[0]
            coeffs, pos = _parse_expr(tokens, 2)
            if pos >= len(tokens) - 1:
                raise ValueError(f"row {name} missing relation or rhs: {line!r}")
            op = tokens[pos]
            op = {"<": "<=", ">": ">=", "=<": "<=", "=>": ">="}.get(op, op)
            rhs_tokens = tokens[pos + 1:]
            rhs_sign = 1.0
            if rhs_tokens and rhs_tokens[0] in ("+", "-"):
                rhs_sign = -1.0 if rhs_tokens[0] == "-" else 1.0
                rhs_tokens = rhs_tokens[1:]
            if len(rhs_tokens) != 1 or not _is_number(rhs_tokens[0]):
                raise ValueError(f"row {name} has a non-numeric rhs: {line!r}")
            rows.append((name, coeffs, op, rhs_sign * float(rhs_tokens[0])))
        elif section == "bounds":
            _parse_bound_line(tokens, bounds)
        elif section == "binaries":
            for tok in tokens:
                if not _is_number(tok):
                    binaries.add(tok)
        elif section == "general":
            continue
        else:
            raise ValueError(f"content outside any LP section: {line!r}")
    return ParsedLp(sense, objective, rows, bounds, binaries)


def _parse_bound_line(tokens: list[str], bounds: dict) -> None:
    # forms: "lo <= var <= hi" | "var <= hi" | "var >= lo" | "var free"
    def num_at(i_start):
        sign = 1.0
        i = i_start
        if tokens[i] in ("+", "-"):
            sign = -1.0 if tokens[i] == "-" else 1.0
            i += 1
        return sign * float(tokens[i]), i + 1

    if len(tokens) >= 2 and tokens[-1].lower() == "free" and not _is_number(tokens[0]):
        bounds[tokens[0]] = (None, None)
        return
    if _is_number(tokens[0]) or tokens[0] in ("+", "-"):
        lo, i = num_at(0)
        if tokens[i] != "<=":
            raise ValueError(f"bad bound line: {tokens}")
        var = tokens[i + 1]
        if i + 2 < len(tokens) and tokens[i + 2] == "<=":
            hi, _ = num_at(i + 3)
            bounds[var] = (lo, hi)
        else:
            bounds[var] = (lo, None)
        return
    var = tokens[0]
    op = tokens[1]
    val, _ = num_at(2)
    lo, hi = bounds.get(var, (None, None))
    if op == "<=":
        bounds[var] = (lo, val)
    elif op == ">=":
        bounds[var] = (val, hi)
    elif op == "=":
        bounds[var] = (val, val)
    else:
        raise ValueError(f"bad bound operator: {op}")


# ------------------------------------------------------------------- model


@dataclass(frozen=True)
class ConstraintModel:
    term_spec: TermSpec
    weights: tuple[float, ...]
    offset: float
    meta: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        if len(self.weights) != self.term_spec.num_terms:
            raise ValueError(
                f"{len(self.weights)} weights for {self.term_spec.num_terms} terms"
            )
        for j, w in enumerate(self.weights):
            if not abs(w) <= WEIGHT_BOX:
                raise ValueError(f"weight {j} = {w} outside [-{WEIGHT_BOX}, {WEIGHT_BOX}]")
        if not abs(self.offset) <= WEIGHT_BOX:
            raise ValueError(f"offset {self.offset} outside [-{WEIGHT_BOX}, {WEIGHT_BOX}]")


def model_bounds(m: ConstraintModel, x) -> bool:
    """True = prune, iff sum_j w_j t_j(x) strictly exceeds the offset.
    Ties keep exploring (safety-biased)."""
    return dot_terms(m.weights, expand_terms(m.term_spec, x)) > m.offset


def save_model(m: ConstraintModel, path) -> None:
    doc = {
        "schema": MODEL_SCHEMA_VERSION,
        "n": m.term_spec.n,
        "term_order": m.term_spec.term_names(),
        "weights": list(m.weights),
        "c0": m.offset,
        "meta": m.meta,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_model(path) -> ConstraintModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as e:
            raise ModelFormatError(f"{path}: not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise ModelFormatError(f"{path}: expected a JSON object")
    for key in ("schema", "n", "term_order", "weights", "c0"):
        if key not in doc:
            raise ModelFormatError(f"{path}: missing field {key!r}")
    if doc["schema"] != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"{path}: unsupported schema {doc['schema']!r} (expected {MODEL_SCHEMA_VERSION})"
        )
    n = doc["n"]
    if not isinstance(n, int) or n < 1:
        raise ModelFormatError(f"{path}: bad feature dimension {n!r}")
    spec = TermSpec(n)
    if doc["term_order"] != spec.term_names():
        raise ModelFormatError(f"{path}: term order does not match the n={n} layout")
    weights = doc["weights"]
    if not isinstance(weights, list) or len(weights) != spec.num_terms:
        raise ModelFormatError(
            f"{path}: expected {spec.num_terms} weights, got "
            f"{len(weights) if isinstance(weights, list) else type(weights).__name__}"
        )
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise ModelFormatError(f"{path}: meta must be an object")
    try:
        return ConstraintModel(
            term_spec=spec,
            weights=tuple(float(w) for w in weights),
            offset=float(doc["c0"]),
            meta=meta,
        )
    except (TypeError, ValueError) as e:
        raise ModelFormatError(f"{path}: {e}") from e


# ----------------------------------------------------------------- solving


@dataclass(frozen=True)
class CoverageReport:
    positives: int
    positive_violations: int  # hard guarantee: always 0
    negatives: int
    negatives_covered: int
    conflicts: int = 0  # negatives sharing a positive's exact feature vector
    phase: str = "separable"

    @property
    def coverage(self) -> float:
        if self.negatives == 0:
            return 1.0
        return self.negatives_covered / self.negatives


def _lp(c, a_ub, b_ub, bounds, remaining: float):
    return linprog(
        c,
        A_ub=a_ub,
        b_ub=b_ub,
        bounds=bounds,
        method="highs",
        options={"time_limit": max(remaining, 0.01)},
    )


def solve(
    p: MilpProblem, time_limit: float = 300.0, seed: int = 0
) -> tuple[ConstraintModel, CoverageReport]:
    """Fit (w, c0) for the I=1 case.

    Guarantees, in order: every positive satisfies dot_terms(w, t) <= c0
    (enforced unconditionally by lifting c0 to the exact maximum positive
    value, with the zero model as final fallback); if the data is separable
    inside the box the returned model covers all negatives; otherwise the
    least-satisfiable negatives are dropped greedily (largest LP violation
    margin first, multiplicity-weighted) until the rest are covered.
    Coverage is always re-measured exactly on the full raw example lists.
    Deterministic; the seed is recorded but no randomness is used.
    """
    if p.num_constraints != 1:
        raise UnsupportedProblemError(
            f"internal solver handles num_constraints=1, got {p.num_constraints}; "
            "use export_lp and an external MILP solver"
        )
    start = time.perf_counter()
    deadline = start + time_limit

    def remaining() -> float:
        return deadline - time.perf_counter()

    if remaining() <= 0:
        raise NoModelError("time limit exhausted before solving began")

    T = p.term_spec.num_terms
    pos_raw = p.pos_terms
    neg_raw = p.neg_terms
    n_pos, n_neg = len(pos_raw), len(neg_raw)
    base_meta = {
        "solver": "scipy-highs",
        "seed": seed,
        "normalization": "per-term max-abs",
        "epsilon": p.epsilon,
        "big_m": p.big_m,
        "examples_positive": n_pos,
        "examples_negative": n_neg,
    }

    _mats: dict[str, np.ndarray] = {}

    def _matrix(which: str) -> np.ndarray:
        if which not in _mats:
            raw, count = (pos_raw, n_pos) if which == "pos" else (neg_raw, n_neg)
            _mats[which] = np.asarray(raw, dtype=float).reshape(count, T)
        return _mats[which]

    # Exact evaluation at scale: a float64 matvec differs from the deployed
    # sequential accumulation by far less than band = 1e-10 * (|row| . |w|),
    # so rows outside the band are classified by the matvec alone and only
    # rows inside it are re-evaluated with dot_terms.
    def _banded(which: str, w_arr: np.ndarray):
        m = _matrix(which)
        vals = m @ w_arr
        band = np.abs(m) @ np.abs(w_arr) * 1e-10 + 1e-30
        return vals, band

    def _exact_max(w: list, w_arr, w_zero: bool) -> float:
        if w_zero:
            return 0.0
        if n_pos <= _EXACT_PASS_LIMIT:
            return max(dot_terms(w, row) for row in pos_raw)
        vals, band = _banded("pos", w_arr)
        low = float((vals - band).max())
        cand = np.flatnonzero(vals + band >= low)
        return max(dot_terms(w, pos_raw[int(i)]) for i in cand)

    def _exact_count_above(which: str, w: list, w_arr, w_zero: bool, c0: float) -> int:
        raw, count = (pos_raw, n_pos) if which == "pos" else (neg_raw, n_neg)
        if count == 0:
            return 0
        if w_zero:
            return count if 0.0 > c0 else 0
        if count <= _EXACT_PASS_LIMIT:
            return sum(1 for row in raw if dot_terms(w, row) > c0)
        vals, band = _banded(which, w_arr)
        certain = int((vals - band > c0).sum())
        unsure = np.flatnonzero((vals - band <= c0) & (vals + band > c0))
        return certain + sum(1 for i in unsure if dot_terms(w, raw[int(i)]) > c0)

    def finish(weights, c0: float, phase: str, conflicts: int):
        # Clamp solver slop back into the box, then lift c0 so positives are
        # satisfied under the exact deployed accumulation.
        w = [min(max(float(x), -WEIGHT_BOX), WEIGHT_BOX) for x in weights]
        c0 = min(max(float(c0), -WEIGHT_BOX), WEIGHT_BOX)
        w_zero = all(x == 0.0 for x in w)
        w_arr = np.asarray(w, dtype=float)
        if n_pos:
            mx = _exact_max(w, w_arr, w_zero)
            if mx > WEIGHT_BOX:
                # The exact lift would leave the offset box. The decision
                # boundary is invariant under positive scaling of (w, c0),
                # so shrink the whole model until the lifted offset fits;
                # the margin absorbs the re-rounding of the scaled weights.
                lam = (WEIGHT_BOX * (1.0 - 1e-9)) / mx
                w = [x * lam for x in w]
                c0 = max(min(c0 * lam, WEIGHT_BOX), -WEIGHT_BOX)
                w_zero = all(x == 0.0 for x in w)
                w_arr = np.asarray(w, dtype=float)
                mx = _exact_max(w, w_arr, w_zero)
                phase += "+rescaled"
            if mx > c0:
                if mx <= WEIGHT_BOX:
                    c0 = mx
                else:
                    w = [0.0] * T
                    c0 = 0.0
                    w_zero = True
                    w_arr = np.zeros(T)
                    phase += "+zero-fallback"
        covered = _exact_count_above("neg", w, w_arr, w_zero, c0)
        violations = _exact_count_above("pos", w, w_arr, w_zero, c0)
        report = CoverageReport(
            positives=n_pos,
            positive_violations=violations,
            negatives=n_neg,
            negatives_covered=covered,
            conflicts=conflicts,
            phase=phase,
        )
        meta = dict(base_meta)
        meta["phase"] = phase
        meta["conflicts"] = conflicts
        meta["coverage"] = report.coverage
        meta["positive_violations"] = violations
        model = ConstraintModel(
            term_spec=p.term_spec, weights=tuple(w), offset=c0, meta=meta
        )
        return model, report

    if n_neg == 0:
        return finish([0.0] * T, 0.0, "trivial", 0)

    pos_m = _matrix("pos")
    neg_m = _matrix("neg")

    upos = np.unique(pos_m, axis=0) if n_pos else pos_m
    uneg, uneg_counts = np.unique(neg_m, axis=0, return_counts=True)

    # A negative with a positive's exact vector can never be covered while
    # positives are hard; drop it from the LP up front.
    pos_keys = {row.tobytes() for row in upos}
    keep = np.array([row.tobytes() not in pos_keys for row in uneg], dtype=bool)
    conflicts = int(uneg_counts[~keep].sum()) if len(uneg) else 0
    uneg = uneg[keep]
    uneg_counts = uneg_counts[keep]

    if len(uneg) == 0:
        return finish([0.0] * T, 0.0, "soft", conflicts)

    stacked = np.vstack([upos, uneg]) if len(upos) else uneg
    scales = np.abs(stacked).max(axis=0)
    scales[scales == 0.0] = 1.0
    pn = upos / scales if len(upos) else upos
    nn = uneg / scales

    bounds = [(-WEIGHT_BOX * s, WEIGHT_BOX * s) for s in scales]
    bounds.append((-WEIGHT_BOX, WEIGHT_BOX))
    eps = p.epsilon

    def check_violations(z):
        w, c0 = z[:T], z[T]
        vp = pn @ w - c0 if len(pn) else np.zeros(0)
        vn = (c0 + eps) - nn @ w
        tol = 1e-6 * max(1.0, abs(c0))
        return vp, vn, tol

    # ---- hard phase: feasibility, with row generation past the size limit
    candidate = None
    separable = False
    total_rows = len(pn) + len(nn)
    if total_rows <= _DIRECT_ROW_LIMIT:
        pw = np.arange(len(pn))
        nw = np.arange(len(nn))
        direct = True
    else:
        pw = np.arange(min(len(pn), _GENERATION_CHUNK))
        nw = np.arange(min(len(nn), _GENERATION_CHUNK))
        direct = False
    cvec = np.zeros(T + 1)
    while True:
        if remaining() <= 0:
            if candidate is None:
                raise NoModelError("time limit exhausted before any model was found")
            break
        a_pos = np.hstack([pn[pw], -np.ones((len(pw), 1))]) if len(pw) else np.zeros((0, T + 1))
        a_neg = np.hstack([-nn[nw], np.ones((len(nw), 1))])
        a_ub = np.vstack([a_pos, a_neg])
        b_ub = np.concatenate([np.zeros(len(pw)), np.full(len(nw), -eps)])
        res = _lp(cvec, a_ub, b_ub, bounds, remaining())
        if res.status == 2:
            break  # infeasible on a subset => infeasible in full: soft mode
        if res.status != 0 or res.x is None:
            break  # numerical trouble: fall through to the soft path
        z = res.x
        candidate = z
        vp, vn, tol = check_violations(z)
        bad_p = np.flatnonzero(vp > tol)
        bad_n = np.flatnonzero(vn > tol)
        if len(bad_p) == 0 and len(bad_n) == 0:
            separable = True
            break
        if direct:
            # All rows were present; residual "violations" are solver slop,
            # not missing rows. Accept and let finish() settle exactness.
            separable = True
            break
        order_p = bad_p[np.argsort(-vp[bad_p], kind="stable")][:_GENERATION_CHUNK]
        order_n = bad_n[np.argsort(-vn[bad_n], kind="stable")][:_GENERATION_CHUNK]
        pw = np.unique(np.concatenate([pw, order_p]))
        nw = np.unique(np.concatenate([nw, order_n]))

    if separable and candidate is not None:
        w = candidate[:T] / scales
        return finish(w, candidate[T], "separable", conflicts)

    # ---- soft phase: positives hard, elastic negatives, greedy drops
    # Past the working limit, only the most frequent unique negatives are
    # optimized for coverage; the rest are still counted exactly by finish().
    if len(nn) > _SOFT_WORKING_LIMIT:
        keep_idx = np.sort(np.argsort(-uneg_counts, kind="stable")[:_SOFT_WORKING_LIMIT])
        soft_nn = nn[keep_idx]
        soft_counts = uneg_counts[keep_idx]
    else:
        soft_nn = nn
        soft_counts = uneg_counts
    active = np.ones(len(soft_nn), dtype=bool)
    pw = np.arange(min(len(pn), _GENERATION_CHUNK)) if len(pn) else np.arange(0)
    best_z = None
    while True:
        if remaining() <= 0:
            break
        act_idx = np.flatnonzero(active)
        n_act = len(act_idx)
        n_pw = len(pw)
        # columns: w(T), c0, slack per active negative
        left = np.vstack(
            [
                np.hstack([pn[pw], -np.ones((n_pw, 1))]) if n_pw else np.zeros((0, T + 1)),
                np.hstack([-soft_nn[act_idx], np.ones((n_act, 1))]),
            ]
        )
        top = csr_matrix(left)
        slack_cols = sparse_vstack(
            [csr_matrix((n_pw, n_act)), -sparse_eye(n_act, format="csr")], format="csr"
        )
        a_full = sparse_hstack([top, slack_cols], format="csr")
        b_full = np.concatenate([np.zeros(n_pw), np.full(n_act, -eps)])
        c_full = np.concatenate([np.zeros(T + 1), soft_counts[act_idx].astype(float)])
        bnds = bounds + [(0, None)] * n_act
        res = _lp(c_full, a_full, b_full, bnds, remaining())
        if res.status != 0 or res.x is None:
            break
        z = res.x[: T + 1]
        slacks = res.x[T + 1 :]
        best_z = z
        # positives must be globally clean before we trust the slacks
        vp = pn @ z[:T] - z[T] if len(pn) else np.zeros(0)
        tol = 1e-6 * max(1.0, abs(z[T]))
        bad_p = np.flatnonzero(vp > tol)
        if len(bad_p):
            order_p = bad_p[np.argsort(-vp[bad_p], kind="stable")][:_GENERATION_CHUNK]
            new_pw = np.unique(np.concatenate([pw, order_p]))
            if len(new_pw) == len(pw):
                break
            pw = new_pw
            continue
        slacked = np.flatnonzero(slacks > 1e-7)
        if len(slacked) == 0:
            break
        order = slacked[np.argsort(-slacks[slacked], kind="stable")]
        n_drop = max(1, len(slacked) // _DROP_SHARE)
        active[act_idx[order[:n_drop]]] = False

    if best_z is None:
        if candidate is not None:
            w = candidate[:T] / scales
            return finish(w, candidate[T], "soft", conflicts)
        raise NoModelError("time limit exhausted before any model was found")
    w = best_z[:T] / scales
    return finish(w, best_z[T], "soft", conflicts)
