"""Command-line front end: run, revenue, tune, verify, reproduce-paper.

Every report is a JSON line with floats rounded to 6 significant digits;
only ``reproduce-paper`` prints a human-readable table. Exit codes:
0 ok, 2 parse error, 3 invariant violation, 4 mechanism precondition,
5 verification failure, 6 reproduction failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import resources
from pathlib import Path

from . import sim
from .ama import AmaParams, run_ama, run_vcg
from .distributions import distribution_from_dict
from .errors import DomainError, ModelError, PreconditionError, ScenarioError, XmktError
from .model import Agent, Role
from .myerson import check_mhr, run_myerson
from .valuation import PiecewisePolynomial

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_PRECONDITION, EXIT_VERIFY, EXIT_REPRODUCE = 0, 2, 3, 4, 5, 6
SCENARIO_VERSION = 1
BUNDLED = "paper_sec6.json"

# published figures for the bundled scenario
PUBLISHED = {
    "myerson_revenue": 79.20,
    "ama_revenue": 63.53,
    "ama_zeta0_revenue": 52.63,
    "vcg_revenue": 7.667,
    "t_end": 0.975,
    "payment_1": 102.4,
    "payment_2": 0.2188,
}


class ParseError(XmktError):
    pass


def bundled_scenario_path() -> Path:
    return Path(str(resources.files("xmkt") / "examples" / BUNDLED))


# -- scenario files ----------------------------------------------------------

def scenario_from_dict(data) -> sim.Scenario:
    """Validate a decoded scenario document; raise ScenarioError(field, rule) on failure."""
    if not isinstance(data, dict):
        raise ScenarioError("$", "top level must be an object")
    version = data.get("version", SCENARIO_VERSION)
    if version != SCENARIO_VERSION:
        raise ScenarioError("version", f"unsupported version {version!r}, expected {SCENARIO_VERSION}")
    agents = data.get("agents")
    if not isinstance(agents, list) or not agents:
        raise ScenarioError("agents", "must be a non-empty list")
    built = []
    for i, spec in enumerate(agents):
        where = f"agents[{i}]"
        if not isinstance(spec, dict):
            raise ScenarioError(where, "must be an object")
        try:
            role = Role(spec.get("role"))
        except ValueError:
            raise ScenarioError(f"{where}.role", "must be 'offender' or 'defender'") from None
        try:
            c = PiecewisePolynomial.from_dict(spec["c"])
        except KeyError as exc:
            raise ScenarioError(f"{where}.c", f"missing key {exc}") from None
        except (TypeError, ValueError) as exc:
            raise ScenarioError(f"{where}.c", str(exc)) from None
        if "distribution" not in spec:
            raise ScenarioError(f"{where}.distribution", "required")
        try:
            dist = distribution_from_dict(spec["distribution"])
        except KeyError as exc:
            raise ScenarioError(f"{where}.distribution", f"missing key {exc}") from None
        except (TypeError, ValueError, AttributeError) as exc:
            raise ScenarioError(f"{where}.distribution", str(exc)) from None
        theta = spec.get("theta")
        if theta is not None:
            if not isinstance(theta, (int, float)) or not dist.a <= theta <= dist.b:
                raise ScenarioError(f"{where}.theta", f"must lie in the support [{dist.a}, {dist.b}]")
        built.append(Agent(role, c, theta, dist))
    defaults = data.get("defaults", {})
    seed = defaults.get("seed", 0)
    n = defaults.get("n", 100_000)
    if not isinstance(seed, int) or seed < 0:
        raise ScenarioError("defaults.seed", "must be a nonnegative integer")
    if not isinstance(n, int) or n < 2:
        raise ScenarioError("defaults.n", "must be an integer >= 2")
    return sim.Scenario(tuple(built), seed, n)


def parse_scenario(path) -> sim.Scenario:
    """Load a scenario file. Malformed JSON raises ParseError, bad content ScenarioError."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg} at line {exc.lineno} column {exc.colno} (char {exc.pos})") from None
    return scenario_from_dict(data)


# -- report formatting -------------------------------------------------------

def round_sig(obj, digits: int = 6):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{digits}g}") if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: round_sig(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_sig(v, digits) for v in obj]
    return obj


class Reporter:
    def __init__(self, out: str | None):
        self._fh = open(out, "w") if out else sys.stdout

    def emit(self, record: dict) -> None:
        self._fh.write(json.dumps(round_sig(record)) + "\n")

    def text(self, line: str) -> None:
        self._fh.write(line + "\n")

    def close(self) -> None:
        if self._fh is not sys.stdout:
            self._fh.close()
        else:
            sys.stdout.flush()


# -- argument handling -------------------------------------------------------

def _common(p: argparse.ArgumentParser, mech: bool = True) -> None:
    p.add_argument("--scenario", help="scenario JSON file (default: bundled example)")
    p.add_argument("--seed", type=int, help="RNG seed (fallback: $XMKT_SEED, then the scenario default)")
    p.add_argument("-n", type=int, help="number of Monte Carlo samples")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--workers", type=int, default=1, help="threads for sample evaluation")
    if mech:
        p.add_argument("--mech", choices=sim.MECHANISMS, default="myerson")
        p.add_argument("--mu", type=float, nargs="+", help="AMA weights, one per agent")
        p.add_argument("--zeta", type=float, default=0.0)
        p.add_argument("--space", choices=("det", "beta"), default="beta")
        p.add_argument("--fee", type=float, default=1.0, help="fee of the broken-flatfee test double")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xmkt", description="Revenue-maximizing mechanisms for exploit markets.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one mechanism on a fixed type profile")
    _common(p)
    p.add_argument("--theta", type=float, nargs="+", help="reported types (default: scenario thetas)")

    p = sub.add_parser("revenue", help="Monte Carlo expected revenue")
    _common(p)

    p = sub.add_parser("tune", help="search AMA weights and zeta for revenue")
    _common(p, mech=False)
    p.add_argument("--mu-min", type=float, default=1.0)
    p.add_argument("--mu-max", type=float, default=50.0)
    p.add_argument("--zeta-min", type=float, default=0.0)
    p.add_argument("--zeta-max", type=float, default=100.0)
    p.add_argument("--grid", type=int, default=11, help="grid points per tuned axis")
    p.add_argument("--n-tune", type=int, default=20_000, help="samples per candidate during search")

    p = sub.add_parser("verify", help="audit strategy-proofness, IR, monotonicity and MHR")
    _common(p)
    p.add_argument("--suite", action="store_true",
                   help="audit Myerson, VCG and random AMA parameterizations (ignores --mech)")
    p.add_argument("--profiles", type=int, default=1000)
    p.add_argument("--deviations", type=int, default=20)
    p.add_argument("--n-params", type=int, default=20, help="random AMA parameterizations in --suite")
    p.add_argument("--eps", type=float, default=1e-6)

    p = sub.add_parser("reproduce-paper", help="reproduce the published example figures")
    _common(p, mech=False)
    p.add_argument("--n-tune", type=int, default=50_000, help="samples per candidate when tuning")
    return parser


def _seed(args, scenario) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("XMKT_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ParseError(f"XMKT_SEED={env!r} is not an integer") from None
    return scenario.seed


def _mechanism(args, scenario) -> sim.MechanismSpec:
    if args.mech != "ama":
        return sim.MechanismSpec(args.mech, fee=args.fee)
    mu = args.mu or [1.0] * scenario.n_agents
    if len(mu) != scenario.n_agents:
        raise ParseError(f"--mu needs {scenario.n_agents} values, got {len(mu)}")
    space = "det" if args.space == "det" else "beta"
    try:
        return sim.MechanismSpec("ama", AmaParams(tuple(mu), args.zeta, space))
    except DomainError as exc:
        raise ParseError(str(exc)) from None


# -- commands ----------------------------------------------------------------

def cmd_run(args, scenario, rep) -> int:
    mech = _mechanism(args, scenario)
    thetas = args.theta or scenario.fixed_thetas
    if thetas is None:
        raise ParseError("no --theta given and the scenario does not fix every theta")
    if len(thetas) != scenario.n_agents:
        raise ParseError(f"--theta needs {scenario.n_agents} values, got {len(thetas)}")
    for i, (t, d) in enumerate(zip(thetas, scenario.dists)):
        if not d.a <= t <= d.b:
            raise DomainError(f"agent {i + 1}: theta={t} outside support [{d.a}, {d.b}]")
    profile = scenario.profile(thetas)
    if mech.kind == "myerson":
        sim.check_preconditions(scenario, mech)
        result = run_myerson(profile)
    elif mech.kind == "vcg":
        result = run_vcg(profile)
    elif mech.kind == "ama":
        result = run_ama(profile, mech.params)
    else:
        raise ParseError(f"{mech.kind} is a test double for verify only")
    record = mech.describe()
    record["thetas"] = list(thetas)
    record.update(result.to_dict())
    rep.emit(record)
    return EXIT_OK


def cmd_revenue(args, scenario, rep) -> int:
    mech = _mechanism(args, scenario)
    n = args.n or scenario.n
    est = sim.estimate_revenue(scenario, mech, n, _seed(args, scenario), args.workers)
    rep.emit(est.to_dict())
    return EXIT_OK


def _tune(scenario, seed, n_tune, n_final, workers, mu_range, zeta_range, grid):
    res = sim.tune(scenario, mu_range, zeta_range, grid, n_tune, seed)
    mech = sim.MechanismSpec("ama", res.params)
    final = sim.estimate_revenue(scenario, mech, n_final, seed, workers)
    return res, final


def cmd_tune(args, scenario, rep) -> int:
    seed = _seed(args, scenario)
    n = args.n or scenario.n
    res, final = _tune(scenario, seed, args.n_tune, n, args.workers,
                       (args.mu_min, args.mu_max), (args.zeta_min, args.zeta_max), args.grid)
    record = final.to_dict()
    record.update(evaluations=res.evaluations, search_mean=res.estimate.mean, n_tune=args.n_tune)
    rep.emit(record)
    return EXIT_OK


def _audit(scenario, mech, args, seed, rep) -> bool:
    ok = True
    desc = mech.describe()
    if mech.kind == "myerson":
        for i, d in enumerate(scenario.dists):
            mhr = check_mhr(d)
            rep.emit({**desc, "check": "mhr", "agent": i + 1, "passed": bool(mhr),
                      "violation": list(mhr.violation) if mhr.violation else None})
            ok &= bool(mhr)
        if not ok:
            return False
    sp = sim.check_sp(scenario, mech, args.profiles, args.deviations, args.eps, seed)
    ir = sim.check_ir(scenario, mech, args.profiles, 1e-9, seed)
    for name, found in (("sp", sp), ("ir", ir)):
        rep.emit({**desc, "check": name, "profiles": args.profiles, "passed": not found,
                  "violations": len(found), "examples": [v.to_dict() for v in found[:5]]})
        ok &= not found
    for i in range(scenario.n_agents):
        mono = sim.check_monotone_allocation(scenario, mech, i, seed=seed)
        rep.emit({**desc, "check": "monotone", "agent": i + 1, "passed": mono.passed,
                  "max_drop": mono.max_drop, "seed": seed})
        ok &= mono.passed
    return ok


def cmd_verify(args, scenario, rep) -> int:
    seed = _seed(args, scenario)
    if args.suite:
        mechs = [sim.MechanismSpec.myerson(), sim.MechanismSpec.vcg()]
        mechs += [sim.MechanismSpec("ama", p) for p in sim.random_ama_params(scenario.n_agents, args.n_params, seed)]
    else:
        mechs = [_mechanism(args, scenario)]
    results = [_audit(scenario, m, args, seed, rep) for m in mechs]
    passed = all(results)
    rep.emit({"check": "summary", "mechanisms": len(mechs), "passed": passed, "seed": seed})
    return EXIT_OK if passed else EXIT_VERIFY


def reproduce(scenario, seed: int, n: int, n_tune: int, workers: int = 1) -> list[dict]:
    """All published figures for the bundled scenario, each with its tolerance verdict."""
    rows = []

    def row(name, published, target, computed, tol, note=""):
        rows.append({"quantity": name, "published": published, "target": target, "computed": computed,
                     "tolerance": tol, "passed": abs(computed - target) <= tol, "note": note})

    profile = scenario.profile([300.0, 10.0])
    res = run_myerson(profile)
    row("t_end", PUBLISHED["t_end"], 0.975, res.outcome.t_end, 1e-9)
    row("payment agent 1", PUBLISHED["payment_1"], 102.375, res.payments[0], 1e-3, "published value rounded")
    row("payment agent 2", PUBLISHED["payment_2"], 0.21875, res.payments[1], 1e-6, "published value rounded")

    opt = sim.estimate_revenue(scenario, sim.MechanismSpec.myerson(), n, seed, workers)
    target = PUBLISHED["myerson_revenue"]
    row("Myerson revenue", target, target, opt.mean, max(3 * opt.stderr, 0.015 * target))

    ama = sim.estimate_revenue(scenario, sim.MechanismSpec.ama([1, 13], 31), n, seed, workers)
    target = PUBLISHED["ama_revenue"]
    row("AMA(1,13; zeta=31) revenue", target, target, ama.mean, max(3 * ama.stderr, 0.03 * target))
    ratio = ama.mean / opt.mean
    rows.append({"quantity": "AMA / Myerson ratio", "published": 0.80, "target": 0.75, "computed": ratio,
                 "tolerance": None, "passed": ratio >= 0.75, "note": "must be >= 0.75"})

    _, zero = _tune(scenario, seed, n_tune, n, workers, (1.0, 50.0), (0.0, 0.0), 11)
    target = PUBLISHED["ama_zeta0_revenue"]
    row("tuned AMA (zeta=0) revenue", target, target, zero.mean, 0.05 * target,
        f"mu2={zero.mechanism['mu'][1]:.4g}")

    vcg = sim.estimate_revenue(scenario, sim.MechanismSpec.vcg(), n, seed, workers)
    oracle = sim.vcg_revenue_oracle(scenario.dists[0], scenario.dists[1])
    gap = (PUBLISHED["vcg_revenue"] - oracle) / oracle
    row("VCG revenue", PUBLISHED["vcg_revenue"], oracle, vcg.mean, 3 * vcg.stderr,
        f"target is the closed form; published {PUBLISHED['vcg_revenue']} is {100 * gap:.2f}% above it")
    return rows


def _fmt(x):
    if x is None:
        return "-"
    return f"{x:.6g}"


def cmd_reproduce(args, scenario, rep) -> int:
    seed = _seed(args, scenario)
    n = args.n or scenario.n
    rows = reproduce(scenario, seed, n, args.n_tune, args.workers)
    header = f"{'quantity':<28} {'published':>10} {'target':>10} {'computed':>12} {'tolerance':>10}  verdict"
    rep.text(f"seed={seed} n={n}")
    rep.text(header)
    rep.text("-" * len(header))
    for r in rows:
        verdict = "PASS" if r["passed"] else "FAIL"
        line = (f"{r['quantity']:<28} {_fmt(r['published']):>10} {_fmt(r['target']):>10} "
                f"{_fmt(r['computed']):>12} {_fmt(r['tolerance']):>10}  {verdict}")
        if r["note"]:
            line += f"  ({r['note']})"
        rep.text(line)
    return EXIT_OK if all(r["passed"] for r in rows) else EXIT_REPRODUCE


COMMANDS = {"run": cmd_run, "revenue": cmd_revenue, "tune": cmd_tune, "verify": cmd_verify,
            "reproduce-paper": cmd_reproduce}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        scenario = parse_scenario(args.scenario or bundled_scenario_path())
    except ParseError as exc:
        print(f"xmkt: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ScenarioError as exc:
        print(f"xmkt: invalid scenario: {exc.field}: {exc.rule}", file=sys.stderr)
        return EXIT_INVARIANT
    if getattr(args, "n", None) is not None and args.n < 2:
        print("xmkt: parse error: -n must be at least 2", file=sys.stderr)
        return EXIT_PARSE
    rep = Reporter(args.out)
    try:
        return COMMANDS[args.command](args, scenario, rep)
    except ParseError as exc:
        print(f"xmkt: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except PreconditionError as exc:
        print(f"xmkt: precondition failed: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (DomainError, ModelError) as exc:
        print(f"xmkt: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    finally:
        rep.close()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
