"""Command-line experiment runner.

Exit codes: 0 = the checked property holds, 1 = it was refuted,
2 = usage, parse or I/O error (no output file is written in that case).
"""

from __future__ import annotations

import argparse
import csv
import importlib
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

import numpy as np

from liplab.errors import LiplabError, LPInfeasible
from liplab.formats import game_from_dict, load_json_source, profile_from_dict
from liplab.game import (
    Concept,
    CorrelatedDistribution,
    MixedProfile,
    expected_payoffs,
    is_equilibrium,
    measure_lipschitz,
    regret_correlated,
    regret_pure,
    regret_well_supported,
)
from liplab.hard_games import get_baseline, make_matching_pennies, rho, run_deterministic_adversary
from liplab.queries import (
    DistQuerySpec,
    DistributionAccess,
    QueryLedger,
    get_adversary,
    sample_count,
    wrap_profile_algorithm_as_distribution,
    zero_adversary,
)
from liplab.reductions import (
    aggregate_profile,
    build_consistent_game,
    induce_population_game,
    multi_lipschitz_population_sizes,
    simulate_population_distribution_query,
)
from liplab.solvers import (
    GeneratorConfig,
    all_pure_equilibria,
    brute_force_pure,
    brute_force_pure_charged,
    max_profile_prob_ace,
    min_pure_epsilon,
    random_lipschitz_game,
    random_multi_lipschitz_game,
)

EXIT_OK, EXIT_REFUTED, EXIT_USAGE = 0, 1, 2


class UsageError(LiplabError):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"not a number: {text!r}") from exc


def _list(text: str | None, conv=_fraction) -> list:
    if text is None:
        return []
    return [conv(t) for t in text.split(",") if t.strip()]


def _int(text) -> int:
    try:
        return int(text)
    except ValueError as exc:
        raise UsageError(f"not an integer: {text!r}") from exc


def derived_seed(seed: int, *stream: int) -> int:
    """Seed for an independent stream identified by ``(seed, *stream)``."""
    return int(np.random.SeedSequence([seed, *stream]).generate_state(1)[0])


# --------------------------------------------------------------------------
# output


def _emit(args, payload=None, rows=None, header=None) -> None:
    if args.format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        text = buf.getvalue()
    else:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, Fraction):
        return repr(float(x))
    return str(x)


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    if not args.game or not args.profile:
        raise UsageError("verify needs --game and --profile")
    eps = float(args.epsilon or 0)
    game = game_from_dict(load_json_source(args.game))
    profile = profile_from_dict(load_json_source(args.profile), game.n, game.m)
    if args.concept:
        concept = Concept(args.concept.upper())
    elif isinstance(profile, CorrelatedDistribution):
        concept = Concept.ACE
    elif isinstance(profile, MixedProfile):
        concept = Concept.ANE
    else:
        concept = Concept.PNE
    if concept in (Concept.WSNE, Concept.ANE) and isinstance(profile, tuple):
        profile = MixedProfile.from_pure(profile, game.m)
    if concept is Concept.ACE and not isinstance(profile, CorrelatedDistribution):
        if isinstance(profile, tuple):
            profile = MixedProfile.from_pure(profile, game.m)
        profile = CorrelatedDistribution.from_mixed(profile)
    holds, report = is_equilibrium(game, profile, eps, concept)
    _emit(args, {"holds": holds, "epsilon": eps, "report": report.to_dict()},
          [[concept.value, eps, holds, report.max_regret]], ["concept", "epsilon", "holds", "max_regret"])
    return EXIT_OK if holds else EXIT_REFUTED


# --------------------------------------------------------------------------
# adversary


def _load_plugin(spec: str):
    module, _, func = spec.partition(":")
    if not func:
        raise UsageError("--algorithm must look like 'package.module:function'")
    try:
        return getattr(importlib.import_module(module), func)
    except (ImportError, AttributeError) as exc:
        raise UsageError(f"cannot load algorithm {spec!r}: {exc}") from exc


def cmd_adversary(args) -> int:
    ks = _list(args.k, _int) or [2]
    m = _int(args.m or 2)
    alpha = _fraction(args.alpha or "0.1")
    scale = float(_fraction(args.lam or "1"))
    if m < 2 or any(k < 1 for k in ks):
        raise UsageError("need m >= 2 and k >= 1")
    if not (0 < alpha < Fraction(m - 1, m)):
        raise UsageError("alpha must lie in (0, (m-1)/m)")
    if not (0 < scale <= 1):
        raise UsageError("--lambda must lie in (0, 1]")
    for k in ks:
        if m ** (2 * k) > 2**16:
            raise UsageError(f"k={k}, m={m} is too large for exact regret evaluation")
    algorithm = _load_plugin(args.algorithm) if args.algorithm else get_baseline(
        args.baseline, None if args.budget is None else _int(args.budget))

    outcomes = [run_deterministic_adversary(algorithm, k, m, alpha, scale) for k in ks]
    ok = all(o.verdict != "lower-bound-violated" and o.indistinguishable for o in outcomes)
    if args.format == "csv":
        rows = [[o.n, o.q, _fmt(o.bound_q), _fmt(o.epsilon), _fmt(o.regret_achieved), o.verdict] for o in outcomes]
        _emit(args, rows=rows, header=["n", "q", "bound_q", "epsilon", "regret_achieved", "verdict"])
    else:
        payload = outcomes[0].to_dict() if len(outcomes) == 1 else [o.to_dict() for o in outcomes]
        _emit(args, payload)
    return EXIT_OK if ok else EXIT_REFUTED


# --------------------------------------------------------------------------
# region


def region_rows(m: int, alphas: list[Fraction], grid: int) -> tuple[list[list], bool]:
    """LP trace of max Pr(a = (1,1)) subject to Pr(a = (2,2)) = c, per alpha.

    Returns the rows and whether the exact-equilibrium check (eps = 0 admits only
    the point (1/m^2, 1/m^2)) and every witness re-verification passed.
    """
    game = make_matching_pennies(1, m)
    rows = []
    ok = True
    settings = [(None, Fraction(0))] + [(a, Fraction(m - 1, m) - a) for a in alphas]
    for alpha, eps in settings:
        r = None if alpha is None else rho(alpha, m)
        free = max_profile_prob_ace(game, eps, (0, 0))
        ok &= regret_correlated(game, free.witness).max_regret <= float(eps) + 1e-9
        rows.append([_fmt(alpha) if alpha is not None else "exact", _fmt(eps), _fmt(r) if r is not None else "",
                     "free", _fmt(free.value), len(free.witness.support), "optimal"])
        feasible = []
        for s in range(grid + 1):
            c = Fraction(s, grid)
            try:
                res = max_profile_prob_ace(game, eps, (0, 0), fixed={(1, 1): c})
            except LPInfeasible:
                rows.append([rows[-1][0], _fmt(eps), rows[-1][2], _fmt(c), "", 0, "infeasible"])
                continue
            ok &= regret_correlated(game, res.witness).max_regret <= float(eps) + 1e-9
            feasible.append((c, res.value))
            rows.append([rows[-1][0], _fmt(eps), rows[-1][2], _fmt(c), _fmt(res.value),
                         len(res.witness.support), "optimal"])
        if alpha is None:
            point = Fraction(1, m * m)
            ok &= free.value == point and all(c == point and v == point for c, v in feasible)
    return rows, ok


def cmd_region(args) -> int:
    m = _int(args.m or 2)
    if args.k is not None and _int(args.k) != 1:
        raise UsageError("region traces are two-player only (k = 1)")
    if not 2 <= m <= 4:
        raise UsageError("region needs 2 <= m <= 4")
    alphas = _list(args.alpha) or [Fraction(1, 3), Fraction(1, 6), Fraction(1, 100)]
    if any(not (0 < a < Fraction(m - 1, m)) for a in alphas):
        raise UsageError("each alpha must lie in (0, (m-1)/m)")
    grid = _int(args.grid)
    if grid < 1:
        raise UsageError("--grid must be positive")
    rows, ok = region_rows(m, alphas, grid)
    header = ["alpha", "epsilon", "rho", "p22", "max_p11", "support_size", "status"]
    if args.format == "csv":
        _emit(args, rows=rows, header=header)
    else:
        _emit(args, {"m": m, "checks_passed": ok, "rows": [dict(zip(header, r)) for r in rows]})
    return EXIT_OK if ok else EXIT_REFUTED


# --------------------------------------------------------------------------
# reduce


def _parse_sizes(text: str | None, n: int) -> tuple[int, ...]:
    vals = _list(text, _int) or [2]
    if len(vals) == 1:
        vals = vals * n
    if len(vals) != n or any(v < 1 for v in vals):
        raise UsageError(f"--sizes needs one value or {n} positive values")
    return tuple(vals)


def cmd_reduce(args) -> int:
    eps = float(_fraction(args.epsilon or "0.6"))
    lambdas = [float(x) for x in _list(args.lam)]
    seed = _int(args.seed or 0)
    eta = float(_fraction(args.eta or "0.05"))
    if eps <= 0:
        raise UsageError("--epsilon must be positive")
    report: dict = {}
    ok = True

    if len(lambdas) > 1:
        if any(not 0 <= x <= 1 for x in lambdas):
            raise UsageError("each lambda must lie in [0, 1]")
        big = float(_fraction(args.Lambda)) if args.Lambda else sum(lambdas)
        if big <= 0:
            raise UsageError("Lambda must be positive")
        sizes = multi_lipschitz_population_sizes(lambdas, big)
        n = len(lambdas)
        multi = {"lambdas": lambdas, "Lambda": big, "sizes": list(sizes), "total": sum(sizes),
                 "bound": 3 * n, "within_bound": sum(sizes) <= 3 * n}
        ok &= multi["within_bound"]
        base = (game_from_dict(load_json_source(args.game)) if args.game
                else random_multi_lipschitz_game(lambdas, 2, seed))
        if sum(sizes) <= 16:
            lam_hat = measure_lipschitz(induce_population_game(base, sizes))
            multi["induced_lipschitz"] = lam_hat
            multi["induced_within_Lambda_over_n"] = lam_hat <= big / n + 1e-12
            ok &= multi["induced_within_Lambda_over_n"]
        report["multi_lipschitz"] = multi
    else:
        base = game_from_dict(load_json_source(args.game)) if args.game else make_matching_pennies(1, 2)
        sizes = _parse_sizes(args.sizes, base.n)
    delta = float(_fraction(args.delta)) if args.delta else eps / 5
    if not 0 <= delta < 1:
        raise UsageError("--delta must lie in [0, 1)")
    if sum(sizes) * math.log2(base.m) > 16:
        raise UsageError("population game too large for the exhaustive transfer check")

    pop = induce_population_game(base, sizes)
    n, m = base.n, base.m
    report["population"] = {"n": n, "m": m, "sizes": list(sizes), "N": pop.n}

    # accounting: one population query costs n*m base queries
    base_ledger = QueryLedger()
    uniform = MixedProfile.uniform(pop.n, m)
    est = simulate_population_distribution_query(base_ledger, pop, uniform, DistQuerySpec(0.0), zero_adversary)
    exact_err = float(np.max(np.abs(est - expected_payoffs(pop, uniform))))
    accounting = {"population_queries": 1, "base_dist_queries": base_ledger.dist_count,
                  "expected": n * m, "identity_holds": base_ledger.dist_count == n * m,
                  "zero_noise_error": exact_err}
    ok &= accounting["identity_holds"] and exact_err <= 1e-12
    report["accounting"] = accounting

    # equilibrium transfer over every eps-PNE of the population game
    worst = 0.0
    pnes = all_pure_equilibria(pop, eps)
    for a in pnes:
        worst = max(worst, regret_well_supported(base, aggregate_profile(pop, a)).max_regret)
    transfer = {"epsilon": eps, "num_pne": len(pnes), "worst_wsne_regret": worst,
                "all_transfer": worst <= eps + 1e-12}
    ok &= transfer["all_transfer"]
    report["transfer"] = transfer

    # demonstration chain: profile algorithm -> delta-distribution queries -> consistent game
    adversary = get_adversary(args.adversary)
    inner = lambda access: brute_force_pure_charged(access, eps / 2)  # noqa: E731
    access = DistributionAccess(pop, DistQuerySpec(delta), adversary)
    a_star = wrap_profile_algorithm_as_distribution(inner)(access)
    q = access.ledger.dist_count
    chain = {"delta": delta, "adversary": args.adversary, "pop_dist_queries": q,
             "base_dist_queries_via_reduction": n * m * q}
    if delta > 0:
        t = sample_count(n, delta, 1.0 / max(sizes), eta)
        chain["samples_per_base_query"] = t
        chain["profile_queries_if_sampled"] = n * m * q * t
    if a_star is None:
        chain["found"] = False
    else:
        g2 = build_consistent_game(pop, access.ledger.degenerate_dist_log(), delta)
        r2 = regret_pure(g2, a_star).max_regret
        r1 = regret_pure(pop, a_star).max_regret
        agg = aggregate_profile(pop, a_star)
        r0 = regret_well_supported(base, agg).max_regret
        chain.update({
            "found": True,
            "profile": [x + 1 for x in a_star],
            "regret_in_consistent_game": r2,
            "regret_in_population_game": r1,
            "aggregate": agg.dists.tolist(),
            "base_wsne_regret": r0,
            "envelope": g2.certificate.envelope,
            "transfer_holds": r2 <= eps / 2 + 1e-12 and (delta > eps / 4 or r1 <= eps + 1e-12)
            and (r1 > eps + 1e-12 or r0 <= eps + 1e-12),
        })
        ok &= chain["transfer_holds"]
    report["chain"] = chain
    report["passed"] = bool(ok)
    if args.format == "csv":
        rows = [["population_queries", 1], ["base_dist_queries", base_ledger.dist_count],
                ["num_pne", len(pnes)], ["worst_wsne_regret", _fmt(worst)], ["passed", bool(ok)]]
        _emit(args, rows=rows, header=["quantity", "value"])
    else:
        _emit(args, report)
    return EXIT_OK if ok else EXIT_REFUTED


# --------------------------------------------------------------------------
# existence


def existence_lambda(n: int, eps: float) -> float:
    return eps / math.sqrt(8 * n * math.log(4 * n))


def _existence_trial(job):
    n, eps, seed, t = job
    lam = existence_lambda(n, eps)
    game = random_lipschitz_game(GeneratorConfig(n, 2, lam, derived_seed(seed, n, t)))
    found = brute_force_pure(game, eps)
    min_eps, prof = min_pure_epsilon(game)
    return n, t, found is not None, min_eps, prof


def cmd_existence(args) -> int:
    ns = _list(args.n, _int) or [8]
    eps = float(_fraction(args.epsilon or "0.3"))
    trials = _int(args.trials or 50)
    seed = _int(args.seed or 0)
    jobs = _int(args.jobs or 1)
    if any(not 1 <= n <= 12 for n in ns):
        raise UsageError("existence scans need 1 <= n <= 12")
    if _int(args.m or 2) != 2:
        raise UsageError("existence scans are binary-action only")
    if not (0 < eps < 1) or trials < 1:
        raise UsageError("need 0 < epsilon < 1 and trials >= 1")
    work = [(n, eps, seed, t) for n in ns for t in range(trials)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_existence_trial, work))
    else:
        results = [_existence_trial(w) for w in work]
    found = sum(r[2] for r in results)
    if args.format == "csv":
        rows = [[n, t, _fmt(me), "".join(str(x + 1) for x in prof), f] for n, t, f, me, prof in results]
        _emit(args, rows=rows, header=["n", "seed", "min_epsilon", "profile", "found"])
    else:
        _emit(args, {
            "epsilon": eps,
            "lambda": {str(n): existence_lambda(n, eps) for n in ns},
            "lambda_as13": {str(n): eps / math.sqrt(8 * n * math.log(2 * 2 * n)) for n in ns},
            "found": found,
            "instances": len(results),
            "fraction": found / len(results),
            "rows": [{"n": n, "seed": t, "min_epsilon": me, "profile": [x + 1 for x in prof], "found": f}
                     for n, t, f, me, prof in results],
        })
    return EXIT_OK if found == len(results) else EXIT_REFUTED


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--game", help="game JSON file or inline JSON")
    common.add_argument("--profile", help="profile JSON file or inline JSON")
    common.add_argument("--epsilon")
    common.add_argument("--delta")
    common.add_argument("--gamma")
    common.add_argument("--eta")
    common.add_argument("--alpha", help="value or comma list (fractions such as 1/3 allowed)")
    common.add_argument("--lambda", dest="lam", help="Lipschitz scale, or comma list of per-player values")
    common.add_argument("--Lambda")
    common.add_argument("--k")
    common.add_argument("--m")
    common.add_argument("--n")
    common.add_argument("--sizes")
    common.add_argument("--seed")
    common.add_argument("--trials")
    common.add_argument("--out")
    common.add_argument("--format", choices=["json", "csv"], default="json")

    parser = argparse.ArgumentParser(prog="liplab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", parents=[common], help="check an equilibrium claim")
    p.add_argument("--concept", choices=[c.value for c in Concept] + [c.value.lower() for c in Concept])
    p = sub.add_parser("adversary", parents=[common], help="run the deterministic lower-bound adversary")
    p.add_argument("--baseline", default="uniform-output")
    p.add_argument("--algorithm", help="plugin 'module:function' taking a profile-query handle")
    p.add_argument("--budget")
    p = sub.add_parser("region", parents=[common], help="trace the eps-ACE probability region")
    p.add_argument("--grid", default="20")
    p = sub.add_parser("reduce", parents=[common], help="population-game reduction report")
    p.add_argument("--adversary", default="truncation")
    p = sub.add_parser("existence", parents=[common], help="scan random Lipschitz games for eps-PNEs")
    p.add_argument("--jobs", default="1")
    return parser


COMMANDS = {
    "verify": cmd_verify,
    "adversary": cmd_adversary,
    "region": cmd_region,
    "reduce": cmd_reduce,
    "existence": cmd_existence,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return COMMANDS[args.command](args)
    except (LiplabError, ValueError) as exc:
        print(f"liplab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
