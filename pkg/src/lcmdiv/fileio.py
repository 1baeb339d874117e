"""Readers and writers for design, counts, chain and plan files.

Formats
-------
Design (JSON): object with ``k, m, t, u`` and nested arrays ``Q`` (m x k x t),
``C`` (m x k), ``V`` (m x u), ``d`` (m).  An optional ``comment`` field is
preserved on write and ignored on read.

Counts (delimited text): either per-pattern rows with a header line
``y_1,...,y_k,count`` (patterns may appear in any order; missing patterns
count zero), or a headerless dense vector of ``2**k`` integers, one per line
or comma-separated on one line, in pattern-index order.

Chain (JSON): object with an inline ``design`` plus ``steps``, a list of
objects with cumulative ``zero_lambda`` / ``zero_eta`` lists of 1-based
coordinate indices.

Plan (JSON): inline ``null_design`` and ``alt_design``, ``theta0`` with
``lambda`` and ``eta`` arrays, and the plain scalar fields of the plan.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import InputFormatError
from .inference import NestedChain
from .model import ModelDesign, ObservedCounts, Theta, pattern_index
from .montecarlo import SimulationPlan


def file_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise InputFormatError(f"file not found: {path}")
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}: not valid JSON ({exc})")


def design_to_dict(design: ModelDesign, comment: str = None) -> dict:
    doc = {
        "k": design.k,
        "m": design.m,
        "t": design.t,
        "u": design.u,
        "Q": np.asarray(design.Q).tolist(),
        "C": np.asarray(design.C).tolist(),
        "V": np.asarray(design.V).tolist(),
        "d": np.asarray(design.d).tolist(),
    }
    if comment:
        doc["comment"] = comment
    return doc


def design_from_dict(doc: dict, where: str = "design") -> ModelDesign:
    try:
        design = ModelDesign(
            Q=np.array(doc["Q"], dtype=np.float64),
            C=np.array(doc["C"], dtype=np.float64),
            V=np.array(doc["V"], dtype=np.float64),
            d=np.array(doc["d"], dtype=np.float64),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise InputFormatError(f"{where}: bad design structure ({exc})")
    for name in ("k", "m", "t", "u"):
        if name in doc and int(doc[name]) != getattr(design, name):
            raise InputFormatError(
                f"{where}: declared {name} = {doc[name]} does not match arrays "
                f"({name} = {getattr(design, name)})"
            )
    return design


def read_design(path) -> ModelDesign:
    return design_from_dict(_load_json(path), where=str(path))


def write_design(design: ModelDesign, path, comment: str = None) -> None:
    with open(path, "w") as fh:
        json.dump(design_to_dict(design, comment), fh, indent=1)
        fh.write("\n")


def read_counts(path, k: int = None) -> ObservedCounts:
    try:
        lines = [ln.strip() for ln in Path(path).read_text().splitlines()]
    except FileNotFoundError:
        raise InputFormatError(f"file not found: {path}")
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise InputFormatError(f"{path}: empty counts file")

    first = [tok.strip() for tok in lines[0].replace("\t", ",").split(",")]
    has_header = any(not _is_number(tok) for tok in first)
    if has_header:
        return _read_pattern_rows(lines, path, k)
    return _read_dense(lines, path, k)


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _read_pattern_rows(lines, path, k):
    header = [tok.strip().lower() for tok in lines[0].replace("\t", ",").split(",")]
    if header[-1] != "count" or not all(h.startswith("y") for h in header[:-1]):
        raise InputFormatError(f"{path}: expected header y_1,...,y_k,count")
    k_file = len(header) - 1
    if k is not None and k != k_file:
        raise InputFormatError(f"{path}: file has {k_file} items, expected {k}")
    n = np.zeros(2 ** k_file, dtype=np.int64)
    seen = set()
    for row_no, ln in enumerate(lines[1:], start=2):
        toks = [tok.strip() for tok in ln.replace("\t", ",").split(",")]
        if len(toks) != k_file + 1:
            raise InputFormatError(f"{path}:{row_no}: expected {k_file + 1} fields")
        try:
            y = [int(tok) for tok in toks[:-1]]
            count = int(toks[-1])
        except ValueError:
            raise InputFormatError(f"{path}:{row_no}: non-integer entry")
        if any(b not in (0, 1) for b in y):
            raise InputFormatError(f"{path}:{row_no}: responses must be 0 or 1")
        if count < 0:
            raise InputFormatError(f"{path}:{row_no}: negative count")
        nu = pattern_index(y)
        if nu in seen:
            raise InputFormatError(f"{path}:{row_no}: duplicate pattern {y}")
        seen.add(nu)
        n[nu - 1] = count
    return ObservedCounts(n=n)


def _read_dense(lines, path, k):
    toks = []
    for ln in lines:
        toks.extend(tok.strip() for tok in ln.replace("\t", ",").split(",") if tok.strip())
    try:
        values = [int(tok) for tok in toks]
    except ValueError:
        raise InputFormatError(f"{path}: dense counts must be integers")
    size = len(values)
    if size < 2 or size & (size - 1):
        raise InputFormatError(f"{path}: dense counts length must be a power of two, got {size}")
    if k is not None and size != 2 ** k:
        raise InputFormatError(f"{path}: expected {2 ** k} cells, got {size}")
    return ObservedCounts(n=np.array(values, dtype=np.int64))


def write_counts(counts: ObservedCounts, path) -> None:
    from .model import all_patterns

    k = counts.k
    pats = all_patterns(k)
    lines = [",".join([f"y_{i + 1}" for i in range(k)] + ["count"])]
    for nu in range(2 ** k):
        lines.append(",".join(str(b) for b in pats[nu]) + f",{int(counts.n[nu])}")
    Path(path).write_text("\n".join(lines) + "\n")


def chain_to_dict(chain: NestedChain, comment: str = None) -> dict:
    doc = {
        "design": design_to_dict(chain.design),
        "steps": [
            {
                "zero_lambda": [i + 1 for i in zl],
                "zero_eta": [i + 1 for i in ze],
            }
            for zl, ze in chain.steps
        ],
    }
    if comment:
        doc["comment"] = comment
    return doc


def chain_from_dict(doc: dict, where: str = "chain") -> NestedChain:
    try:
        design = design_from_dict(doc["design"], where=f"{where}.design")
        steps = tuple(
            (
                tuple(int(i) - 1 for i in step.get("zero_lambda", [])),
                tuple(int(i) - 1 for i in step.get("zero_eta", [])),
            )
            for step in doc["steps"]
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{where}: bad chain structure ({exc})")
    return NestedChain(design=design, steps=steps)


def read_chain(path) -> NestedChain:
    return chain_from_dict(_load_json(path), where=str(path))


def write_chain(chain: NestedChain, path, comment: str = None) -> None:
    with open(path, "w") as fh:
        json.dump(chain_to_dict(chain, comment), fh, indent=1)
        fh.write("\n")


def plan_to_dict(plan: SimulationPlan, comment: str = None) -> dict:
    doc = {
        "null_design": design_to_dict(plan.null_design),
        "alt_design": design_to_dict(plan.alt_design),
        "theta0": {
            "lambda": np.asarray(plan.theta0.lam).tolist(),
            "eta": np.asarray(plan.theta0.eta).tolist(),
        },
        "lambda8_grid": list(plan.lambda8_grid),
        "sample_sizes": list(plan.sample_sizes),
        "a_values": list(plan.a_values),
        "replications": plan.replications,
        "alpha": plan.alpha,
        "seed": plan.seed,
        "estimator_a": plan.estimator_a,
        "dof_policy": plan.dof_policy,
        "fit": {
            "starts": plan.fit_starts,
            "start_at_truth": plan.start_at_truth,
            "grad_tol": plan.fit_grad_tol,
            "max_iters": plan.fit_max_iters,
        },
    }
    if comment:
        doc["comment"] = comment
    return doc


def plan_from_dict(doc: dict, where: str = "plan") -> SimulationPlan:
    try:
        fit_doc = doc.get("fit", {})
        return SimulationPlan(
            null_design=design_from_dict(doc["null_design"], f"{where}.null_design"),
            alt_design=design_from_dict(doc["alt_design"], f"{where}.alt_design"),
            theta0=Theta(
                lam=np.array(doc["theta0"]["lambda"], dtype=np.float64),
                eta=np.array(doc["theta0"]["eta"], dtype=np.float64),
            ),
            lambda8_grid=tuple(float(x) for x in doc["lambda8_grid"]),
            sample_sizes=tuple(int(x) for x in doc["sample_sizes"]),
            a_values=tuple(float(x) for x in doc["a_values"]),
            replications=int(doc["replications"]),
            alpha=float(doc.get("alpha", 0.05)),
            seed=int(doc.get("seed", 0)),
            estimator_a=float(doc.get("estimator_a", 2.0 / 3.0)),
            dof_policy=str(doc.get("dof_policy", "rank")),
            fit_starts=int(fit_doc.get("starts", 1)),
            start_at_truth=bool(fit_doc.get("start_at_truth", True)),
            fit_grad_tol=float(fit_doc.get("grad_tol", 1e-6)),
            fit_max_iters=int(fit_doc.get("max_iters", 300)),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputFormatError(f"{where}: bad plan structure ({exc})")


def read_plan(path) -> SimulationPlan:
    return plan_from_dict(_load_json(path), where=str(path))


def write_plan(plan: SimulationPlan, path, comment: str = None) -> None:
    with open(path, "w") as fh:
        json.dump(plan_to_dict(plan, comment), fh, indent=1)
        fh.write("\n")
