"""Command-line front end.

Subcommands: compile, verify, analyze-chain, anneal, info.  Exit codes are a
stable contract: 0 success, 1 verification failed, 2 input/validation error,
3 scale-infeasible, 4 internal solver failure.  The environment variable
STOQTIM_DIM_CAP overrides the basis dimension cap.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import replace
from typing import Optional

import numpy as np

from . import serialize
from .anneal import AdiabaticPath, track_gaps, translate_path
from .basis import DEFAULT_DIMENSION_CAP, enumerate_basis
from .chain import ChainParams, chain_spectrum
from .encodings import Encoding
from .errors import (IllConditionedRotationError, ScaleInfeasibleError,
                     SolverError, StoqtimError, UnreachableTargetError,
                     ValidationError)
from .harness import simulator_matrix, structurally_stoquastic, verify_step
from .models import HcbHamiltonian, TimHamiltonian, model_class
from .operators import build_matrix
from .reductions import (DEFAULT_VERIFY_CAP, ReductionParams, ReductionStep,
                         compose_chain, model_sizes, reduce_hcb1_to_hcb2,
                         reduce_hcb2_to_hcd, reduce_hcbstar_to_hcb1,
                         reduce_hcd_to_tim, reduce_multiparticle_to_hcb2,
                         reduce_stoqlh_to_hcbstar, reduce_tim_to_degree3)
from .spectra import measure_simulation_error, set_seed

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_VALIDATION = 2
EXIT_SCALE = 3
EXIT_SOLVER = 4

CLASS_ORDER = ["stoqlh", "hcbstar", "hcb1", "hcb2", "hcd", "tim", "tim3"]


def _load_model(path: str):
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(
            f"malformed JSON in {path} at line {exc.lineno}, column {exc.colno}: {exc.msg}")
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}")
    return serialize.model_from_dict(obj)


def _chain_stage(model) -> str:
    cls = model_class(model)
    if cls == "hcb":
        return "hcb1" if model.range_ == 1 else "hcb2"
    if cls == "tim":
        return "tim3" if model.is_degree3() else "tim"
    return cls


def _write_json(path: Optional[str], obj: dict) -> None:
    text = serialize.dumps(obj)
    if path is None or path == "-":
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _params_from_args(args) -> ReductionParams:
    kw = dict(eps_total=args.eps, eta_total=args.eta,
              p_min=args.p_min, verify_cap=args.verify_cap,
              dimension_cap=args.dim_cap)
    if getattr(args, "delta", None) is not None:
        kw.update(delta_mode="explicit", explicit_delta=args.delta,
                  explicit_delta_tilde=getattr(args, "delta_tilde", None))
    return ReductionParams(**kw)


_SINGLE_STEP = {
    ("stoqlh", "hcbstar"): reduce_stoqlh_to_hcbstar,
    ("hcbstar", "hcb1"): reduce_hcbstar_to_hcb1,
    ("hcb1", "hcb2"): reduce_hcb1_to_hcb2,
    ("hcb2", "hcd"): reduce_hcb2_to_hcd,
    ("hcd", "tim"): reduce_hcd_to_tim,
    ("tim", "tim3"): reduce_tim_to_degree3,
}


def run_compile(args) -> int:
    model = _load_model(args.input)
    stage = _chain_stage(model)
    if args.from_class and args.from_class != stage:
        raise ValidationError(
            f"--from {args.from_class} does not match the input class {stage}")
    src, dst = CLASS_ORDER.index(stage), CLASS_ORDER.index(args.to_class)
    if src >= dst:
        raise ValidationError(f"--to {args.to_class} is not downstream of {stage}")
    params = _params_from_args(args)
    if stage == "stoqlh":
        steps = compose_chain(model, params, stop_at=args.to_class)
    else:
        steps = []
        crosses_dimers = CLASS_ORDER.index("hcd") <= dst and src < CLASS_ORDER.index("hcd")
        extra = 1 if (crosses_dimers and isinstance(model, HcbHamiltonian)
                      and model.projector_terms) else 0
        params = replace(params, steps_total=dst - src + extra, allow_saturation=True)
        current = model
        for a, b in zip(CLASS_ORDER[src:dst], CLASS_ORDER[src + 1:dst + 1]):
            if (b == "hcd" and isinstance(current, HcbHamiltonian)
                    and current.projector_terms):
                steps.append(reduce_multiparticle_to_hcb2(current, params))
                current = steps[-1].simulator
            steps.append(_SINGLE_STEP[(a, b)](current, params))
            current = steps[-1].simulator
    final = steps[-1].simulator
    _write_json(args.output, serialize.model_to_dict(final))
    if args.emit_encoding:
        _emit_encoding(steps, args)
    if args.report:
        reports = [verify_step(s, args.verify_cap).to_dict() for s in steps]
        _write_json(args.report, {"schema_version": 1, "steps": reports})
    return EXIT_OK


def _emit_encoding(steps: list[ReductionStep], args) -> None:
    if steps[-1].encoding_kind == "chain-tensor":
        blocks = [(steps[-1].notes["chain_length"], steps[-1].notes["chain_coupling"])]
        blocks *= model_sizes(steps[-1].target)[0]
        obj = {"schema_version": 1, "kind": "chain-tensor",
               "chains": [{"length": m, "coupling": g} for (m, g) in blocks]}
        if len(steps) > 1:
            enc = steps[0].encoding(args.dim_cap)
            for s in steps[1:-1]:
                enc = enc.compose(s.encoding(args.dim_cap))
            obj["prefix"] = serialize.encoding_to_dict(enc)
        _write_json(args.emit_encoding, obj)
        return
    enc = steps[0].encoding(args.dim_cap)
    for s in steps[1:]:
        enc = enc.compose(s.encoding(args.dim_cap))
    _write_json(args.emit_encoding, serialize.encoding_to_dict(enc))


def run_verify(args) -> int:
    target = _load_model(args.target)
    sim = _load_model(args.simulator)
    with open(args.encoding) as fh:
        enc_obj = json.load(fh)
    H_t = build_matrix(target, enumerate_basis(target, args.dim_cap))
    H_s = simulator_matrix(sim, args.dim_cap)
    if enc_obj.get("kind") == "basis-map":
        pairs = enc_obj["pairs"]
        mapping = [0] * len(pairs)
        for (i, s) in pairs:
            mapping[int(i)] = int(s)
        enc = Encoding.from_map(mapping, H_s.dimension)
    else:
        raise ValidationError("verify supports basis-map encodings")
    measured = measure_simulation_error(H_t, H_s, enc.to_matrix())
    ok = measured.epsilon <= args.eps and measured.eta <= args.eta
    _write_json(args.report, {
        "schema_version": 1,
        "eta": measured.eta,
        "epsilon": measured.epsilon,
        "per_level_deviation": list(measured.per_level_deviation),
        "eta_requested": args.eta,
        "epsilon_requested": args.eps,
        "passed": bool(ok),
    })
    return EXIT_OK if ok else EXIT_VERIFY_FAILED


def run_analyze_chain(args) -> int:
    lengths = [int(x) for x in args.m.split(",")]
    rows = []
    for m in lengths:
        if args.c is not None:
            for c in (float(x) for x in args.c.split(",")):
                rows.append(ChainParams.from_exponent(m, c))
        elif args.g is not None:
            for g in (float(x) for x in args.g.split(",")):
                rows.append(ChainParams(m, g))
        else:
            raise ValidationError("analyze-chain needs --c or --g")
    out = sys.stdout if args.output in (None, "-") else open(args.output, "w")
    try:
        writer = csv.writer(out)
        writer.writerow(["m", "g", "c", "E0", "E1", "E2", "delta", "Delta", "xi", "eta"])
        for p in rows:
            s = chain_spectrum(p)
            c = p.exponent if p.exponent is not None else \
                (p.coupling - 1.0) * p.length / np.log(p.length)
            writer.writerow([p.length, repr(p.coupling), repr(float(c)),
                             repr(s.e0), repr(s.e1), repr(s.e2),
                             repr(s.splitting), repr(s.gap),
                             repr(s.xi), repr(s.eta)])
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def run_anneal(args) -> int:
    with open(args.path) as fh:
        obj = json.load(fh)
    unknown = set(obj) - {"schema_version", "start", "end", "samples"}
    if unknown:
        raise ValidationError(f"unknown keys in path spec: {sorted(unknown)}")
    start = serialize.model_from_dict(obj["start"])
    end = serialize.model_from_dict(obj["end"])
    samples = obj.get("samples")
    if args.samples:
        samples = list(np.linspace(0.0, 1.0, args.samples))
    path = AdiabaticPath(start, end, tuple(samples) if samples else ())
    if args.translate_to:
        params = _params_from_args(args)
        translated = translate_path(path, params, stop_at=args.translate_to,
                                    cap=args.dim_cap)
        report = translated.report
    else:
        report = track_gaps(path, cap=args.dim_cap)
    _write_json(args.report, report.to_dict())
    return EXIT_OK


def run_info(args) -> int:
    model = _load_model(args.input)
    n, m = model_sizes(model)
    info = {
        "class": model_class(model),
        "stage": _chain_stage(model),
        "n": n,
        "m": m,
        "J": model.interaction_strength(),
        "stoquastic": structurally_stoquastic(model),
    }
    if isinstance(model, TimHamiltonian):
        info["max_zz_degree"] = model.max_zz_degree()
        info["degree3"] = model.is_degree3()
        info["zz_degree_profile"] = {str(u): model.zz_degree(u) for u in range(model.n)}
    else:
        info["max_graph_degree"] = model.graph.max_degree() if hasattr(model, "graph") else None
    _write_json(args.output, info)
    return EXIT_OK


def _add_common(sp, budget: bool = True):
    sp.add_argument("--dim-cap", type=int,
                    default=int(os.environ.get("STOQTIM_DIM_CAP", DEFAULT_DIMENSION_CAP)))
    sp.add_argument("--verify-cap", type=int, default=DEFAULT_VERIFY_CAP)
    sp.add_argument("--seed", type=int, default=0)
    if budget:
        sp.add_argument("--eps", type=float, default=0.1)
        sp.add_argument("--eta", type=float, default=0.1)
        sp.add_argument("--p-min", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stoqtim", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compile", help="compile a Hamiltonian down the reduction chain")
    c.add_argument("--input", required=True)
    c.add_argument("--from", dest="from_class", choices=CLASS_ORDER[:-1])
    c.add_argument("--to", dest="to_class", required=True, choices=CLASS_ORDER[1:])
    c.add_argument("--output", default=None)
    c.add_argument("--emit-encoding", default=None)
    c.add_argument("--report", default=None)
    c.add_argument("--delta", type=float, default=None)
    c.add_argument("--delta-tilde", type=float, default=None)
    _add_common(c)
    c.set_defaults(func=run_compile)

    v = sub.add_parser("verify", help="measure the simulation error of a compiled pair")
    v.add_argument("--target", required=True)
    v.add_argument("--simulator", required=True)
    v.add_argument("--encoding", required=True)
    v.add_argument("--report", default=None)
    _add_common(v)
    v.set_defaults(func=run_verify)

    a = sub.add_parser("analyze-chain", help="closed-form chain analytics table (CSV)")
    a.add_argument("--m", required=True, help="comma-separated chain lengths")
    a.add_argument("--c", default=None, help="comma-separated exponents")
    a.add_argument("--g", default=None, help="comma-separated couplings (> 1)")
    a.add_argument("--output", default=None)
    _add_common(a, budget=False)
    a.set_defaults(func=run_analyze_chain)

    q = sub.add_parser("anneal", help="track gaps along a path, optionally translated")
    q.add_argument("--path", required=True)
    q.add_argument("--samples", type=int, default=None)
    q.add_argument("--report", default=None)
    q.add_argument("--translate-to", default=None, choices=CLASS_ORDER[1:])
    _add_common(q)
    q.set_defaults(func=run_anneal)

    i = sub.add_parser("info", help="class, sizes, J, stoquasticity, degree profile")
    i.add_argument("--input", required=True)
    i.add_argument("--output", default=None)
    _add_common(i, budget=False)
    i.set_defaults(func=run_info)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    set_seed(args.seed)
    try:
        return args.func(args)
    except IllConditionedRotationError as exc:
        # orthogonal-subspace detection: an encoding/simulator mismatch
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ValidationError, UnreachableTargetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ScaleInfeasibleError as exc:
        print(f"scale-infeasible: {exc}", file=sys.stderr)
        return EXIT_SCALE
    except (SolverError, StoqtimError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
