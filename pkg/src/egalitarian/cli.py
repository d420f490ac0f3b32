"""Command-line front end.

Reports go to stdout as JSON (numbers as exact integers or "p/q" strings),
summaries to stderr.  Exit codes: 0 ok, 1 property falsified or attack
found, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .analysis import lorenz_check, type2_breakpoint_oracle
from .errors import (BudgetExceeded, InfeasibleInstance, ParseError, TooLarge, ValidationError)
from .flow import as_rational
from .instance_io import (ONE_SIDED, TWO_SIDED, demander_ids, emit_instance, encode_rational,
                          fixture_names, generate_random, load_fixture, parse_instance,
                          supplier_ids)
from .mechanism import (OneSidedInstance, check_feasible, decompose, egalitarian,
                        first_type2_breakpoint)
from .strategy import (DEMANDER, SUPPLIER, Agent, Mode, Side, attack_links, attack_peaks,
                       check_bossiness, default_peak_grid)

OK, FALSIFIED, USAGE = 0, 1, 2


class _UsageError(Exception):
    pass


def _rational_arg(text: str) -> Fraction:
    try:
        return as_rational(text)
    except (ValueError, TypeError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"{text!r} is not an exact rational like 1/2") from None


def _load(ref: str):
    path = Path(ref)
    if path.is_file():
        return parse_instance(path.read_text(encoding="utf-8"))
    if ref in fixture_names():
        return load_fixture(ref)
    raise _UsageError(f"no instance file or bundled fixture named {ref!r}")


def _instances(args) -> list:
    refs = list(args.instance or [])
    if getattr(args, "all_fixtures", False):
        refs += fixture_names()
    if not refs:
        raise _UsageError("give --instance PATH (or a bundled fixture name)")
    return [(ref, _load(ref)) for ref in refs]


def _vec(ids, values) -> dict:
    return {k: encode_rational(v) for k, v in zip(ids, values)}


def _agent_name(inst, a: Agent) -> str:
    return (supplier_ids(inst) if a.side == SUPPLIER else demander_ids(inst))[a.index]


def _alloc(inst, alloc) -> dict:
    out = {"x": _vec(supplier_ids(inst), alloc.x)}
    if not isinstance(inst, OneSidedInstance):
        out["y"] = _vec(demander_ids(inst), alloc.y)
    return out


def _attack_json(inst, report) -> dict:
    out = {"found": report.found, "candidates": report.candidates}
    if report.seed is not None:
        out["seed"] = report.seed
    if not report.found:
        return out
    m = report.manipulation
    out["coalition"] = [_agent_name(inst, a) for a in m.coalition]
    out["mode"] = m.mode.value
    if m.reported_peaks:
        out["reported_peaks"] = {_agent_name(inst, a): encode_rational(v) for a, v in m.reported_peaks}
    if m.reported_links:
        out["reported_links"] = {
            _agent_name(inst, a): sorted(_partners(inst, a, kept)) for a, kept in m.reported_links}
    out["truthful"] = _alloc(inst, report.truthful_alloc)
    out["manipulated"] = _alloc(inst, report.manipulated_alloc)
    out["profile"] = {_agent_name(inst, a): v.value for a, v in report.improvement_profile}
    return out


def _partners(inst, a: Agent, kept) -> list:
    names = demander_ids(inst) if a.side == SUPPLIER else supplier_ids(inst)
    return [names[k] for k in kept]


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2) + "\n")


def _say(text: str) -> None:
    sys.stderr.write(text + "\n")


# ---------------------------------------------------------------------------
# subcommands


def cmd_solve(args) -> int:
    reports = []
    for ref, inst in _instances(args):
        alloc = egalitarian(inst)
        out = {"instance": ref, **_alloc(inst, alloc)}
        names = {"suppliers": supplier_ids(inst), "demanders": demander_ids(inst)}
        out["breakpoints"] = [{"side": bp.side, "level": encode_rational(bp.lam),
                               "bottleneck": sorted(names[bp.side][i] for i in bp.bottleneck)}
                              for bp in alloc.breakpoints]
        reports.append(out)
        _say(f"{ref}: x = {', '.join(str(v) for v in alloc.x)}")
    _emit(reports[0] if len(reports) == 1 else reports)
    return OK


def cmd_decompose(args) -> int:
    reports = []
    for ref, inst in _instances(args):
        dec = decompose(inst)
        sid, did = supplier_ids(inst), demander_ids(inst)
        reports.append({
            "instance": ref,
            "suppliers_minus": sorted(sid[i] for i in dec.m_minus),
            "suppliers_plus": sorted(sid[i] for i in dec.m_plus),
            "demanders_plus": sorted(did[j] for j in dec.q_plus),
            "demanders_minus": sorted(did[j] for j in dec.q_minus),
        })
        _say(f"{ref}: {len(dec.m_minus)} supplier(s) in the constrained block")
    _emit(reports[0] if len(reports) == 1 else reports)
    return OK


def cmd_feasible(args) -> int:
    status = OK
    reports = []
    for ref, inst in _instances(args):
        ok = check_feasible(inst) if isinstance(inst, OneSidedInstance) else True
        reports.append({"instance": ref, "feasible": ok})
        _say(f"{ref}: {'feasible' if ok else 'infeasible'}")
        status = status if ok else FALSIFIED
    _emit(reports[0] if len(reports) == 1 else reports)
    return status


def cmd_check_lorenz(args) -> int:
    status = OK
    reports = []
    for ref, inst in _instances(args):
        alloc = egalitarian(inst)
        res = lorenz_check(inst, alloc, args.grid_step)
        reports.append({"instance": ref, "grid_step": encode_rational(args.grid_step),
                        "compared": res.compared, "violations": len(res.violations),
                        "joint_flags": res.joint_flags})
        _say(f"{ref}: {res.compared} Pareto allocations on the grid, {len(res.violations)} violation(s)")
        if res.violations:
            status = FALSIFIED
    _emit(reports[0] if len(reports) == 1 else reports)
    return status


def _grid(args, inst) -> list:
    if args.grid_max is None:
        return default_peak_grid(inst, args.grid_step)
    n = int(args.grid_max / args.grid_step)
    return [k * args.grid_step for k in range(n + 1)]


def cmd_fuzz_peaks(args) -> int:
    status = OK
    reports = []
    mode = Mode(args.mode)
    for ref, inst in _instances(args):
        rep = attack_peaks(inst, args.coalition, _grid(args, inst), mode, args.budget, seed=args.seed)
        reports.append({"instance": ref, **_attack_json(inst, rep)})
        _say(f"{ref}: {'ATTACK FOUND' if rep.found else 'no attack'} ({rep.candidates} candidates)")
        if rep.found:
            status = FALSIFIED
    _emit(reports[0] if len(reports) == 1 else reports)
    return status


def cmd_fuzz_links(args) -> int:
    status = OK
    reports = []
    side = Side(args.side)
    for ref, inst in _instances(args):
        rep = attack_links(inst, side, args.coalition, args.budget, seed=args.seed)
        reports.append({"instance": ref, "side": side.value, **_attack_json(inst, rep)})
        _say(f"{ref}: {'ATTACK FOUND' if rep.found else 'no attack'} ({rep.candidates} candidates)")
        if rep.found:
            status = FALSIFIED
    _emit(reports[0] if len(reports) == 1 else reports)
    return status


def cmd_bossiness(args) -> int:
    """Bossiness is a known trait of the mechanism, so a witness still exits 0."""
    reports = []
    for ref, inst in _instances(args):
        agents = [Agent(SUPPLIER, i) for i in range(inst.graph.n_suppliers)]
        if not isinstance(inst, OneSidedInstance):
            agents += [Agent(DEMANDER, j) for j in range(inst.graph.n_demanders)]
        if args.agent:
            agents = [a for a in agents if _agent_name(inst, a) == args.agent]
            if not agents:
                raise _UsageError(f"{ref}: no agent with id {args.agent!r}")
        found = None
        for a in agents:
            found = check_bossiness(inst, a, _grid(args, inst), include_links=args.links)
            if found:
                break
        out = {"instance": ref, "found": found is not None}
        if found:
            out.update({
                "agent": _agent_name(inst, found.agent),
                "report": (encode_rational(found.report) if found.report is not None else
                           {"kept_links": sorted(_partners(inst, found.agent, found.kept_links))}),
                "changed": [_agent_name(inst, a) for a in found.changed],
                "truthful": _alloc(inst, found.truthful),
                "manipulated": _alloc(inst, found.manipulated),
            })
        reports.append(out)
        _say(f"{ref}: {'bossiness witness' if found else 'no witness'}")
    _emit(reports[0] if len(reports) == 1 else reports)
    return OK


def cmd_gen(args) -> int:
    inst = generate_random(args.model, args.suppliers, args.demanders, args.link_prob,
                           (args.min, args.max), args.seed)
    sys.stdout.write(emit_instance(inst))
    return OK


def _passes(inst):
    """Water-filling passes as ``(name, graph, low, high, demands, suppliers, demanders, cover)``."""
    g = inst.graph
    if isinstance(inst, OneSidedInstance):
        dec = decompose(inst)
        yield ("suppliers_minus", g, inst.lower, inst.s, inst.d, dec.m_minus, dec.q_plus, True)
        yield ("suppliers_plus", g, inst.s, inst.upper, inst.d, dec.m_plus, dec.q_minus, True)
        return
    gt = g.transpose()
    zero_s, zero_d = [0] * g.n_suppliers, [0] * g.n_demanders
    yield ("suppliers", g, zero_s, inst.s, inst.d, range(g.n_suppliers),
           [j for j in range(g.n_demanders) if inst.d[j] > 0], False)
    yield ("demanders", gt, zero_d, inst.d, inst.s, range(g.n_demanders),
           [i for i in range(g.n_suppliers) if inst.s[i] > 0], False)


def cmd_oracle_compare(args) -> int:
    status = OK
    reports = []
    for ref, inst in _instances(args):
        rows = []
        for name, g, low, high, dem, sups, dems, cover in _passes(inst):
            newton = first_type2_breakpoint(g, low, high, dem, suppliers=sups, demanders=dems,
                                            require_cover=cover)
            oracle = type2_breakpoint_oracle(g, low, high, dem, suppliers=sups, demanders=dems)
            same = (newton is None) == (oracle is None) and (
                newton is None or (newton.lam == oracle.lam and newton.bottleneck == oracle.bottleneck))

            def show(bp):
                return None if bp is None else {"level": encode_rational(bp.lam),
                                                 "bottleneck": sorted(bp.bottleneck)}
            rows.append({"pass": name, "newton": show(newton), "oracle": show(oracle), "agree": same})
            if not same:
                status = FALSIFIED
        reports.append({"instance": ref, "passes": rows})
        _say(f"{ref}: {'agree' if all(r['agree'] for r in rows) else 'MISMATCH'}")
    _emit(reports[0] if len(reports) == 1 else reports)
    return status


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="egalitarian", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def with_instances(sp, fixtures=False):
        sp.add_argument("--instance", action="append", metavar="PATH",
                        help="instance file or bundled fixture name (repeatable)")
        if fixtures:
            sp.add_argument("--all-fixtures", action="store_true", help="also run every bundled fixture")
        return sp

    with_instances(sub.add_parser("solve", help="egalitarian allocation")).set_defaults(run=cmd_solve)
    with_instances(sub.add_parser("decompose", help="constrained/unconstrained blocks")).set_defaults(
        run=cmd_decompose)
    with_instances(sub.add_parser("feasible", help="one-sided feasibility")).set_defaults(run=cmd_feasible)

    sp = with_instances(sub.add_parser("check-lorenz", help="Lorenz dominance over grid Pareto set"), True)
    sp.add_argument("--grid-step", type=_rational_arg, default=Fraction(1, 4))
    sp.set_defaults(run=cmd_check_lorenz)

    for name, func, help_text in (("fuzz-peaks", cmd_fuzz_peaks, "search peak misreports"),
                                  ("bossiness", cmd_bossiness, "search bossiness witnesses")):
        sp = with_instances(sub.add_parser(name, help=help_text), True)
        sp.add_argument("--grid-step", type=_rational_arg, default=Fraction(1, 2))
        sp.add_argument("--grid-max", type=_rational_arg, default=None,
                        help="largest report tried (default: twice the largest datum)")
        sp.set_defaults(run=func)
        if name == "fuzz-peaks":
            sp.add_argument("--coalition", type=int, default=1)
            sp.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ALL_SINGLE_PEAKED.value)
            sp.add_argument("--budget", type=int, default=10 ** 7)
            sp.add_argument("--seed", type=int, default=None, help="recorded in the report for replay")
        else:
            sp.add_argument("--agent", default=None, help="agent id (default: try every agent)")
            sp.add_argument("--links", action="store_true", help="also try hiding links")

    sp = with_instances(sub.add_parser("fuzz-links", help="search link-hiding coalitions"), True)
    sp.add_argument("--side", choices=[s.value for s in Side], default=Side.MIXED.value)
    sp.add_argument("--coalition", type=int, default=2)
    sp.add_argument("--budget", type=int, default=10 ** 7)
    sp.add_argument("--seed", type=int, default=None, help="recorded in the report for replay")
    sp.set_defaults(run=cmd_fuzz_links)

    sp = sub.add_parser("gen", help="random instance file")
    sp.add_argument("--model", choices=[ONE_SIDED, TWO_SIDED], default=TWO_SIDED)
    sp.add_argument("--suppliers", type=int, default=3)
    sp.add_argument("--demanders", type=int, default=3)
    sp.add_argument("--link-prob", type=float, default=0.5)
    sp.add_argument("--min", type=int, default=0)
    sp.add_argument("--max", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.set_defaults(run=cmd_gen)

    with_instances(sub.add_parser("oracle-compare", help="Newton breakpoints against brute force"),
                   True).set_defaults(run=cmd_oracle_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return USAGE if e.code else OK
    try:
        return args.run(args)
    except (_UsageError, ParseError, ValidationError, InfeasibleInstance, TooLarge,
            BudgetExceeded, ValueError) as e:
        _say(f"error: {e}")
        return USAGE


if __name__ == "__main__":
    sys.exit(main())
