"""Command-line surface.

Exit codes: 0 on success, 1 for validation or parse failures, 2 for
internal invariant violations (a breached certified bound is a defect
signal, never a result). All outputs are deterministic given identical
inputs and seeds.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from .empirical import (
    MdpSampler,
    TraceCoverageError,
    collect,
    empirical_tv_metric,
    required_samples,
    require_coverage,
)
from .envgen import admission_mdp, perturb, random_mdp
from .experiment import InvariantViolation, load_experiment_spec, run_and_write
from .mdp import MdpValidationError, StoppingRule, greedy_policy, policy_evaluation, value_iteration
from .metrics import (
    GammaMismatch,
    MdpPair,
    ShapeMismatch,
    bisim_metric,
    check_convergence_envelope,
    check_optimal_value_gap,
    check_quadrilateral,
    check_tv_dominance,
    compute_rmax,
    transfer_bounds,
    tv_metric,
)
from .serialize import (
    bound_report_to_dict,
    diag_metric_to_dict,
    dump_json,
    load_admission_config,
    load_mdp,
    load_policy,
    metric_table_to_dict,
    policy_to_dict,
    read_trace,
    save_mdp,
    value_to_dict,
)
from .transport import CostShapeMismatch, NotADistribution


def _metric_stop(args) -> StoppingRule:
    if getattr(args, "steps", None) is not None:
        return StoppingRule(steps=args.steps)
    return StoppingRule(delta=args.delta)


def _cmd_solve(args) -> int:
    mdp = load_mdp(args.mdp)
    v = value_iteration(mdp, StoppingRule(delta=args.tol))
    pi = greedy_policy(mdp, v)
    prefix = Path(args.out)
    dump_json(value_to_dict(v), prefix.with_suffix(".values.json"))
    dump_json(policy_to_dict(pi), prefix.with_suffix(".policy.json"))
    print(f"residual {v.residual!r}")
    return 0


def _cmd_eval(args) -> int:
    mdp = load_mdp(args.mdp)
    pi = load_policy(args.policy)
    v = policy_evaluation(mdp, pi, StoppingRule(delta=args.tol))
    dump_json(value_to_dict(v), args.out)
    print(f"residual {v.residual!r}")
    return 0


def _cmd_bsm(args) -> int:
    pair = MdpPair(real=load_mdp(args.real), twin=load_mdp(args.twin))
    table = bisim_metric(pair, _metric_stop(args))
    dump_json(metric_table_to_dict(table), args.out)
    print(f"iterations {table.iterations} apriori_error {table.apriori_error!r}")
    return 0


def _cmd_dtv(args) -> int:
    pair = MdpPair(real=load_mdp(args.real), twin=load_mdp(args.twin))
    diag = tv_metric(pair)
    dump_json(diag_metric_to_dict(diag), args.out)
    print(f"max_dtv_diag {float(diag.d_tv.max())!r}")
    return 0


def _cmd_bound(args) -> int:
    pair = MdpPair(real=load_mdp(args.real), twin=load_mdp(args.twin))
    if args.policy is not None:
        pi = load_policy(args.policy)
    else:
        pi = greedy_policy(pair.twin, value_iteration(pair.twin))
    stop = StoppingRule(delta=args.delta) if args.delta is not None else None
    report = transfer_bounds(pair, pi, stop=stop, include_bsm=not args.skip_bsm)
    dump_json(bound_report_to_dict(report), args.out)
    print(f"actual_regret {report.actual_regret!r} bound_tv {report.bound_tv!r}")
    return 0


def _cmd_sample(args) -> int:
    real_is_trace = args.real.endswith(".csv")
    twin_is_trace = args.twin.endswith(".csv")
    real_mdp_path = args.rewards_real if real_is_trace else args.real
    twin_mdp_path = args.rewards_twin if twin_is_trace else args.twin
    if real_mdp_path is None or twin_mdp_path is None:
        raise ValueError("trace inputs need --rewards-real / --rewards-twin MDP files")
    pair = MdpPair(real=load_mdp(real_mdp_path), twin=load_mdp(twin_mdp_path))
    r_max = compute_rmax(pair)
    n_states, n_actions = pair.real.shape
    k_required = required_samples(args.epsilon, args.alpha, pair.gamma, r_max, n_states)
    k = args.k if args.k is not None else k_required
    models = []
    for side, (path, is_trace, mdp) in enumerate(
        [(args.real, real_is_trace, pair.real), (args.twin, twin_is_trace, pair.twin)]
    ):
        if is_trace:
            models.append(require_coverage(read_trace(path, n_states, n_actions), k))
        else:
            models.append(collect(MdpSampler(mdp), k, seed=args.seed * 2 + side))
    diag = empirical_tv_metric(pair, models[0], models[1])
    out = {
        "d_tv_hat": diag.d_tv.tolist(),
        "r_max": r_max,
        "epsilon": args.epsilon,
        "alpha": args.alpha,
        "k": k,
        "k_required": k_required,
    }
    dump_json(out, args.out)
    print(f"k {k} k_required {k_required} epsilon {args.epsilon!r} alpha {args.alpha!r}")
    if k < k_required:
        print(f"warning: k below the planned sample size {k_required}", file=sys.stderr)
    return 0


def _cmd_gen_admission(args) -> int:
    cfg = load_admission_config(args.config)
    mdp = admission_mdp(cfg, gamma=args.gamma, admit_max=args.admit_max, state_cap=args.state_cap)
    save_mdp(mdp, args.out)
    print(f"states {mdp.num_states} actions {mdp.num_actions}")
    return 0


def _cmd_gen_random(args) -> int:
    mdp = random_mdp(args.states, args.actions, args.gamma, args.sparsity, args.seed)
    save_mdp(mdp, args.out)
    print(f"states {mdp.num_states} actions {mdp.num_actions}")
    return 0


def _cmd_perturb(args) -> int:
    mdp = load_mdp(args.mdp)
    twin = perturb(mdp, args.reward_noise, args.transition_noise, args.seed)
    save_mdp(twin, args.out)
    print(f"reward_noise {args.reward_noise!r} transition_noise {args.transition_noise!r}")
    return 0


def _cmd_experiment(args) -> int:
    spec = load_experiment_spec(args.spec)
    summary = run_and_write(spec, base_seed=args.seed, bsm_cap=args.bsm_cap)
    print(
        f"levels {len(summary['levels'])} pearson_r {summary['pearson_r']!r} "
        f"monotone_fraction {summary['monotone_fraction']!r}"
    )
    return 0


def _cmd_check(args) -> int:
    pair = MdpPair(real=load_mdp(args.real), twin=load_mdp(args.twin))
    stop = StoppingRule(delta=args.delta)
    outcomes = {
        "optimal_value_gap": check_optimal_value_gap(pair, stop),
        "quadrilateral": check_quadrilateral(
            bisim_metric(pair, stop),
            samples=args.quad_samples,
            seed=args.seed,
            exhaustive=pair.num_states <= 6,
        ),
        "tv_dominance": check_tv_dominance(pair, stop),
    }
    if not args.quick:
        outcomes["convergence_envelope"] = check_convergence_envelope(pair)
    report = {}
    failed = False
    for name, outcome in outcomes.items():
        report[name] = {
            "passed": outcome.passed,
            "worst_margin": outcome.worst_margin,
            "location": list(outcome.location),
            "tolerance": outcome.tolerance,
        }
        print(f"{'PASS' if outcome.passed else 'FAIL'} {name} worst_margin {outcome.worst_margin!r}")
        failed = failed or not outcome.passed
    if args.out is not None:
        dump_json(report, args.out)
    return 2 if failed else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="twinmdp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="base RNG seed")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="optimal values and greedy policy")
    p.add_argument("mdp")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", required=True, help="output prefix for .values.json / .policy.json")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("eval", parents=[common], help="evaluate a policy")
    p.add_argument("mdp")
    p.add_argument("policy")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("bsm", parents=[common], help="transport-based twin metric table")
    p.add_argument("real")
    p.add_argument("twin")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--delta", type=float, default=1e-6, help="target certified error")
    group.add_argument("--steps", type=int, default=None, help="fixed iteration count")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bsm)

    p = sub.add_parser("dtv", parents=[common], help="total-variation twin metric diagonal")
    p.add_argument("real")
    p.add_argument("twin")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_dtv)

    p = sub.add_parser("bound", parents=[common], help="certified transfer-bound report")
    p.add_argument("real")
    p.add_argument("twin")
    p.add_argument("policy", nargs="?", default=None, help="policy JSON; twin-optimal if omitted")
    p.add_argument("--delta", type=float, default=None, help="metric stop; tight default if omitted")
    p.add_argument("--skip-bsm", action="store_true", help="TV tier only (large state spaces)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_bound)

    p = sub.add_parser("sample", parents=[common], help="empirical TV metric from samples or traces")
    p.add_argument("real", help="MDP JSON or trace CSV")
    p.add_argument("twin", help="MDP JSON or trace CSV")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--k", type=int, default=None, help="samples per (s, a); planned if omitted")
    p.add_argument("--rewards-real", default=None, help="MDP JSON carrying rewards for a trace input")
    p.add_argument("--rewards-twin", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("gen-admission", parents=[common], help="build the admission-control MDP")
    p.add_argument("config")
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--admit-max", type=int, default=1)
    p.add_argument("--state-cap", type=int, default=20_000)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_admission)

    p = sub.add_parser("gen-random", parents=[common], help="seeded random MDP")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--gamma", type=float, default=0.9)
    p.add_argument("--sparsity", type=float, default=1.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_random)

    p = sub.add_parser("perturb", parents=[common], help="derive a noisy twin MDP")
    p.add_argument("mdp")
    p.add_argument("--reward-noise", type=float, default=0.0)
    p.add_argument("--transition-noise", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("experiment", parents=[common], help="noise sweep with certified bounds")
    p.add_argument("spec")
    p.add_argument("--bsm-cap", type=int, default=16)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("check", parents=[common], help="inequality suites on a pair")
    p.add_argument("real")
    p.add_argument("twin")
    p.add_argument("--delta", type=float, default=1e-6)
    p.add_argument("--quad-samples", type=int, default=2000)
    p.add_argument("--quick", action="store_true", help="skip the convergence envelope sweep")
    p.add_argument("--out", default=None, help="optional report JSON")
    p.set_defaults(func=_cmd_check)

    return parser


_USER_ERRORS = (
    MdpValidationError,
    NotADistribution,
    CostShapeMismatch,
    ShapeMismatch,
    GammaMismatch,
    TraceCoverageError,
    ValueError,
    OSError,
)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; flag mistakes are parse failures
        return 0 if exc.code == 0 else 1
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return 2
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
