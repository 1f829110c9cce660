"""Command-line front end: ``pcsp <command> ...``.

Every command writes a run report (JSON with ``--json``, a short summary
otherwise).  UNSAT and "no" answers are results, not failures; the exit
code is nonzero only when a run could not complete.
"""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor

from . import __version__
from ._accel import backend_name
from .conditions import (GENERATORS, generate_condition, is_trivial, load_condition, max_projection_fraction,
                         parse_label_cover, serialize_condition, serialize_label_cover, to_label_cover,
                         from_label_cover)
from .core import builtin, load_structure, serialize_structure, size_cap, template
from .errors import BudgetExceeded, CapacityError, ParseError, PcspError
from .experiments import EXPERIMENTS, run_experiment
from .freestruct import free_structure, minion_hom_exists, power_structure, power_structure_labels, width1_check
from .homsearch import gac, kl_consistency, search_hom, verify_hom
from .indicator import (check_condition_in_pol, clique_certificate, condition_to_instance, instance_to_condition,
                        is_clique, table_json)
from .minionlab import (NAMED, enumerate_polymorphisms, is_polymorphism, load_function, named_function,
                        serialize_function, violation_rows)
from .relax import solve_promise

EXIT_OK, EXIT_PARSE, EXIT_IO, EXIT_BUDGET, EXIT_CAPACITY = 0, 2, 3, 4, 5


class InputError(PcspError):
    """An argument names neither a readable file nor a built-in object."""


# argument resolution

def _params(text):
    return [int(p) if p.lstrip("-").isdigit() else p for p in text.split(",") if p]


def _resolve(arg, loader, named):
    if os.path.exists(arg):
        return loader(arg)
    try:
        return named(arg)
    except KeyError as exc:
        raise InputError(f"'{arg}' is neither a file nor {exc.args[0].split(' ', 1)[1]}") from None


def load_struct(arg):
    """A structure file, or a built-in name such as K3, C5, H2, T, Horn, L2."""
    return _resolve(arg, load_structure, builtin)


def load_cond(arg):
    """A condition file, or ``kind[:p1,p2]`` such as ``olsak``, ``cyclic:3``, ``g_loop:K4``."""
    def named(spec):
        kind, _, rest = spec.partition(":")
        if kind not in GENERATORS:
            raise KeyError(f"unknown condition '{spec}'")
        params = [builtin(p) if isinstance(p, str) and re.fullmatch(r"[KCH]\d+|T|Horn|L2", p) else p
                  for p in _params(rest)]
        return generate_condition(kind, *params)
    return _resolve(arg, load_condition, named)


def load_fn(arg):
    """A function file, or ``name[:params]`` such as ``olsak_k_2k:3``."""
    def named(spec):
        name, _, rest = spec.partition(":")
        if name not in NAMED:
            raise KeyError(f"unknown function '{spec}'")
        return named_function(name, *_params(rest))
    return _resolve(arg, load_function, named)


def _digest(obj):
    if hasattr(obj, "digest"):
        return obj.digest()
    import hashlib
    return hashlib.sha256(str(obj).encode()).hexdigest()


# commands; each returns (result, certificate, inputs, extra text)

def cmd_hom(a):
    inst, tgt = load_struct(a.instance), load_struct(a.template)
    out = search_hom(inst, tgt, node_budget=a.node_budget, jobs=a.jobs, deterministic=a.deterministic)
    cert = {"kind": "homomorphism", "map": list(out.mapping), "verification":
            "pass" if verify_hom(inst, tgt, out.mapping) else "fail"} if out.found else {"kind": out.status}
    return {"status": out.status, "nodes": out.nodes}, cert, {"instance": inst, "template": tgt}, None


def cmd_gac(a):
    inst, tgt = load_struct(a.instance), load_struct(a.template)
    dom = gac(inst, tgt)
    res = {"status": "wipeout" if dom is None else "consistent"}
    cert = None if dom is None else {"kind": "domains", "domains": [sorted(s) for s in dom.sets]}
    return res, cert, {"instance": inst, "template": tgt}, None


def cmd_klcons(a):
    inst, tgt = load_struct(a.instance), load_struct(a.template)
    fam = kl_consistency(inst, tgt, a.k, a.l)
    res = {"k": a.k, "l": a.l, "status": "empty" if fam is None else "nonempty",
           "family_size": 0 if fam is None else fam.size()}
    return res, None, {"instance": inst, "template": tgt}, None


def cmd_pcsp_solve(a):
    A, B, inst = load_struct(a.A), load_struct(a.B), load_struct(a.instance)
    ans = solve_promise(template(A, B), inst, a.method)
    res = {"answer": ans.answer, "method": ans.method, "sound_for_B": ans.sound_for_b,
           "characterization": ans.characterization}
    return res, ans.certificate, {"A": A, "B": B, "instance": inst}, None


def cmd_poly_enum(a):
    A, B = load_struct(a.A), load_struct(a.B)
    stream = enumerate_polymorphisms(template(A, B), a.n, cap=a.cap)
    tables = list(stream)
    res = {"arity": a.n, "count": len(tables), "truncated": stream.truncated}
    text = "".join(serialize_function(f) for f in tables)
    cert = {"kind": "tables", "tables": [table_json(f) for f in tables[:a.show]]}
    return res, cert, {"A": A, "B": B}, text


def cmd_poly_check(a):
    f, A, B = load_fn(a.function), load_struct(a.A), load_struct(a.B)
    chk = is_polymorphism(f, template(A, B))
    res = {"polymorphism": chk.ok}
    cert = None if chk.ok else {"kind": "violation", "relation": chk.relation,
                                "columns": [list(c) for c in chk.columns],
                                "image": list(violation_rows(f, chk.columns)[0])}
    return res, cert, {"function": f.outputs.tobytes().hex()[:64], "A": A, "B": B}, None


def cmd_cond_gen(a):
    params = [builtin(p) if isinstance(p, str) else p for p in _params(",".join(a.params))]
    c = generate_condition(a.kind, *params)
    return {"name": c.name, "symbols": len(c.symbols), "identities": len(c.identities)}, None, {}, \
        serialize_condition(c)


def cmd_cond_trivial(a):
    c = load_cond(a.condition)
    r = is_trivial(c)
    return {"trivial": r.trivial}, {"kind": "projections", "assignment": r.assignment} if r else None, \
        {"condition": c}, None


def cmd_cond_robust(a):
    c = load_cond(a.condition)
    r = max_projection_fraction(c, node_budget=a.node_budget)
    return {"value": str(r.value), "satisfied": r.satisfied, "total": r.total}, \
        {"kind": "projections", "assignment": r.assignment}, {"condition": c}, None


def cmd_cond_check(a):
    c, A, B = load_cond(a.condition), load_struct(a.A), load_struct(a.B)
    witness = None
    if a.witness:
        witness = {}
        for item in a.witness:
            sym, _, src = item.partition("=")
            witness[sym] = load_fn(src)
    r = check_condition_in_pol(c, template(A, B), witness=witness, node_budget=a.node_budget, jobs=a.jobs,
                               deterministic=a.deterministic)
    res = {"status": r.status, "method": r.method, "indicator_vertices": r.indicator_size, "notes": r.notes}
    return res, r.certificate(a.node_budget), {"condition": c, "A": A, "B": B}, None


def cmd_reduce(a):
    if a.direction == "inst2cond":
        A, inst = load_struct(a.first), load_struct(a.second)
        c = instance_to_condition(A, inst)
        return {"symbols": len(c.symbols), "identities": len(c.identities)}, None, \
            {"A": A, "instance": inst}, serialize_condition(c)
    c, A = load_cond(a.first), load_struct(a.second)
    ind = condition_to_instance(c, A)
    s = ind.structure
    return {"vertices": s.domain_size, "tuples": s.tuple_count}, None, {"condition": c, "A": A}, \
        serialize_structure(s, ind.label_strings())


def cmd_free(a):
    A, B, gen = load_struct(a.A), load_struct(a.B), load_struct(a.generator)
    fs = free_structure(template(A, B), gen, cap=a.cap)
    s = fs.structure
    return {"elements": s.domain_size, "tuples": s.tuple_count}, None, {"A": A, "B": B, "generator": gen}, \
        serialize_structure(s)


def cmd_power_structure(a):
    A = load_struct(a.A)
    s = power_structure(A)
    return {"elements": s.domain_size, "tuples": s.tuple_count}, None, {"A": A}, \
        serialize_structure(s, power_structure_labels(A))


def cmd_width1(a):
    A, B = load_struct(a.A), load_struct(a.B)
    r = width1_check(template(A, B), node_budget=a.node_budget)
    cert = {"kind": "homomorphism", "map": list(r.hom), "verification":
            "pass" if verify_hom(power_structure(A), B, r.hom) else "fail"} if r else None
    return {"width1": r.holds}, cert, {"A": A, "B": B}, None


def cmd_minion_hom(a):
    s = [load_struct(x) for x in (a.A1, a.B1, a.A2, a.B2)]
    r = minion_hom_exists(template(s[0], s[1]), template(s[2], s[3]), cap=a.cap, node_budget=a.node_budget)
    res = {"status": r.status, "method": r.method, "condition": r.condition, "free_size": r.free_size,
           "notes": r.notes}
    cert = {"kind": "homomorphism", "map": list(r.hom)} if r.hom else None
    return res, cert, dict(zip(("A1", "B1", "A2", "B2"), s)), None


def cmd_clique(a):
    g = load_struct(a.graph)
    cl = clique_certificate(g, a.k, node_budget=a.node_budget)
    cert = {"kind": "clique", "clique_vertices": cl, "verification": "pass" if is_clique(g, cl) else "fail"} \
        if cl is not None else None
    return {"found": cl is not None, "size": a.k}, cert, {"graph": g}, None


def cmd_lc2mc(a):
    try:
        with open(a.file, encoding="utf-8") as fh:
            lc = parse_label_cover(fh.read())
    except FileNotFoundError as exc:
        raise InputError(str(exc)) from None
    c = from_label_cover(lc, name=os.path.splitext(os.path.basename(a.file))[0])
    return {"symbols": len(c.symbols), "identities": len(c.identities)}, None, {"file": serialize_label_cover(lc)}, \
        serialize_condition(c)


def cmd_mc2lc(a):
    c = load_cond(a.condition)
    lc = to_label_cover(c)
    return {"left": len(lc.left), "right": len(lc.right), "edges": len(lc.edges)}, None, {"condition": c}, \
        serialize_label_cover(lc, c.name)


def _experiment_job(name):
    return run_experiment(name).to_json()


def cmd_experiment(a):
    names = list(EXPERIMENTS) if a.name == "all" else [a.name]
    if a.name != "all" and a.name not in EXPERIMENTS:
        raise InputError(f"unknown experiment '{a.name}'; choose from {', '.join(EXPERIMENTS)} or all")
    if a.jobs > 1 and len(names) > 1:
        with ProcessPoolExecutor(max_workers=a.jobs) as pool:
            reports = list(pool.map(_experiment_job, names))
    else:
        reports = [_experiment_job(n) for n in names]
    lines = "".join(f"{'PASS' if r['passed'] else 'FAIL'} {r['experiment']} ({r['wall_time']:.1f}s)\n"
                    for r in reports)
    res = {"passed": all(r["passed"] for r in reports), "experiments": reports}
    return res, None, {}, lines


COMMANDS = {
    "hom": cmd_hom, "gac": cmd_gac, "klcons": cmd_klcons, "pcsp-solve": cmd_pcsp_solve,
    "poly-enum": cmd_poly_enum, "poly-check": cmd_poly_check, "cond-gen": cmd_cond_gen,
    "cond-trivial": cmd_cond_trivial, "cond-robust": cmd_cond_robust, "cond-check": cmd_cond_check,
    "reduce": cmd_reduce, "free": cmd_free, "power-structure": cmd_power_structure, "width1": cmd_width1,
    "minion-hom": cmd_minion_hom, "clique": cmd_clique, "lc2mc": cmd_lc2mc, "mc2lc": cmd_mc2lc,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--node-budget", type=int, default=None, help="search node budget")
    common.add_argument("--size-cap", type=int, default=None, help="maximum elements of any construction")
    common.add_argument("--deterministic", action=argparse.BooleanOptionalAction, default=True)
    common.add_argument("--jobs", type=int, default=1)
    common.add_argument("--json", action="store_true", help="print the full run report as JSON")
    common.add_argument("--out", default=None, help="directory for the report and produced files")

    p = argparse.ArgumentParser(prog="pcsp", description="Promise CSP workbench.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_, *args):
        sp = sub.add_parser(name, help=help_, parents=[common])
        for a in args:
            sp.add_argument(a)
        return sp

    add("hom", "find a homomorphism", "instance", "template")
    add("gac", "arc consistency fixpoint", "instance", "template")
    sp = add("klcons", "(k,l)-consistency", "instance", "template")
    sp.add_argument("-k", type=int, required=True)
    sp.add_argument("-l", type=int, required=True)
    sp = add("pcsp-solve", "decide an instance with gac, blp or aip", "A", "B", "instance")
    sp.add_argument("--method", choices=("gac", "blp", "aip"), required=True)
    sp = add("poly-enum", "enumerate polymorphisms of one arity", "A", "B")
    sp.add_argument("-n", type=int, required=True)
    sp.add_argument("--cap", type=int, default=None)
    sp.add_argument("--show", type=int, default=16, help="tables included in the JSON report")
    add("poly-check", "check a function table", "function", "A", "B")
    sp = add("cond-gen", "generate a named minor condition", "kind")
    sp.add_argument("params", nargs="*")
    add("cond-trivial", "satisfiable by projections?", "condition")
    add("cond-robust", "best fraction satisfiable by projections", "condition")
    sp = add("cond-check", "is the condition satisfied in Pol(A, B)?", "condition", "A", "B")
    sp.add_argument("--witness", action="append", metavar="SYMBOL=FUNCTION")
    sp = add("reduce", "instance to condition, or condition to indicator instance")
    sp.add_argument("direction", choices=("inst2cond", "cond2inst"))
    sp.add_argument("first")
    sp.add_argument("second")
    sp = add("free", "free structure of Pol(A, B) generated by a structure", "A", "B", "generator")
    sp.add_argument("--cap", type=int, default=None)
    add("power-structure", "power structure", "A")
    add("width1", "does arc consistency solve PCSP(A, B)?", "A", "B")
    sp = add("minion-hom", "minion homomorphism Pol(A1,B1) -> Pol(A2,B2)", "A1", "B1", "A2", "B2")
    sp.add_argument("--cap", type=int, default=None)
    sp = add("clique", "find a clique", "graph")
    sp.add_argument("k", type=int)
    add("lc2mc", "label cover file to minor condition", "file")
    add("mc2lc", "bipartite minor condition to label cover", "condition")
    add("experiment", f"run an experiment ({', '.join(EXPERIMENTS)}, or all)", "name")
    return p


def _summary(report) -> str:
    res = report["result"]
    if not isinstance(res, dict):
        return str(res)
    return ", ".join(f"{k}={v}" for k, v in res.items() if k not in ("experiments", "characterization", "notes"))


def _write_out(directory, command, report, text):
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, f"{command}.report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, default=str)
    if text is not None:
        with open(os.path.join(directory, f"{command}.out.txt"), "w", encoding="utf-8") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    start = time.perf_counter()
    report = {"command": ["pcsp"] + list(sys.argv[1:] if argv is None else argv), "backend": backend_name()}
    code = EXIT_OK
    text = None
    try:
        with size_cap(max_elements=args.size_cap):
            result, cert, inputs, text = COMMANDS[args.command](args)
        report.update(inputs={k: _digest(v) for k, v in inputs.items()}, result=result, certificate=cert)
        if isinstance(result, dict) and result.get("status") == "budget":
            code = EXIT_BUDGET
    except ParseError as exc:
        code, report["error"] = EXIT_PARSE, f"parse error: {exc}"
    except (OSError, InputError) as exc:
        code, report["error"] = EXIT_IO, f"input error: {exc}"
    except BudgetExceeded as exc:
        code, report["error"] = EXIT_BUDGET, str(exc)
    except CapacityError as exc:
        code, report["error"] = EXIT_CAPACITY, str(exc)
    except (ValueError, KeyError) as exc:
        code, report["error"] = EXIT_PARSE, f"invalid input: {exc}"
    report["wall_time"] = round(time.perf_counter() - start, 4)
    report["budget"] = {"node_budget": args.node_budget, "size_cap": args.size_cap}
    report["exit_code"] = code
    if args.out:
        _write_out(args.out, args.command, report, text)
    if args.json:
        print(json.dumps(report, indent=2, default=str))
    elif "error" in report:
        print(report["error"], file=sys.stderr)
    else:
        if text is not None:
            sys.stdout.write(text)
        if args.command != "experiment" or text is None:
            print(f"# {args.command}: {_summary(report)}")
    return code


if __name__ == "__main__":
    sys.exit(main())
