"""Command-line surface: run, synth, eval, serve."""

from __future__ import annotations

import argparse
import json
import sys

from .core import AdaptConfig, DotaError, ValidationError, validate_config


def _add_hyper_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma2", type=float, default=0.002)
    p.add_argument("--epsilon", type=float, default=1e-4)
    p.add_argument("--rho", type=float, default=0.01)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--gamma", type=float, default=0.05)
    p.add_argument("--feedback", choices=["none", "oracle", "human"],
                   default="none")
    p.add_argument("--strategy", choices=["confidence", "similarity", "random"],
                   default="confidence")
    p.add_argument("--cov", choices=["per-class", "pooled"], default="per-class")
    p.add_argument("--resp-floor", type=float, default=1e-3)
    p.add_argument("--precision-interval", type=int, default=1)
    p.add_argument("--warmup", type=int, default=0)
    p.add_argument("--seed", type=int, default=42)


def _config_from_args(args, feedback=None) -> AdaptConfig:
    return validate_config(AdaptConfig(
        sigma2=args.sigma2, epsilon=args.epsilon, rho=args.rho, eta=args.eta,
        gamma=args.gamma, cov_backend=args.cov,
        responsibility_floor=args.resp_floor,
        precision_refresh_interval=args.precision_interval,
        uncertainty_warmup=args.warmup,
        feedback_mode=feedback if feedback is not None else args.feedback))


def _load_pair(stream_path: str, classifier_path: str):
    from .streamio import read_classifier, read_stream
    spec = read_classifier(classifier_path)
    header, records = read_stream(stream_path)
    if header.dim != spec.dim:
        raise ValidationError(
            f"stream dimension {header.dim} does not match classifier "
            f"dimension {spec.dim}")
    return spec, header, records


def _cmd_run(args) -> int:
    from .report import write_report_jsonl
    from .session import Session
    from .streamio import read_checkpoint, write_checkpoint

    if args.feedback == "human":
        print("human feedback needs the HTTP labeling service; "
              "use `dota serve` instead", file=sys.stderr)
        return 2

    spec, header, records = _load_pair(args.stream, args.classifier)
    if args.resume:
        session = read_checkpoint(args.resume)
        skip = session.stream_index
        records = (r for i, r in enumerate(records) if i >= skip)
    else:
        cfg = _config_from_args(args)
        session = Session(spec, cfg, strategy=args.strategy, seed=args.seed)
    report = session.run_stream(records, window=args.window,
                                stop_after=args.stop_after)
    if args.checkpoint:
        write_checkpoint(session, args.checkpoint)
    if args.report:
        write_report_jsonl(report, args.report)
    print(json.dumps({"summary": report.summary, "timing": report.timing}))
    return 0


def _cmd_synth(args) -> int:
    from .synth import SynthSpec, bayes_oracle_accuracy, generate, load_truth

    balance = None
    if args.balance:
        balance = tuple(float(v) for v in args.balance.split(","))
    spec = SynthSpec(k=args.k, d=args.d, n_samples=args.n, seed=args.seed,
                     weight_perturbation_deg=args.perturb_deg,
                     anisotropic=args.aniso, cone_deg=args.cone_deg,
                     eig_lo=args.eig_lo, eig_hi=args.eig_hi,
                     eig_mid=args.eig_mid, iso_eig=args.iso_eig,
                     temperature=args.tau, class_balance=balance)
    paths = generate(spec, args.out_prefix)
    oracle = bayes_oracle_accuracy(paths["stream"], load_truth(paths["truth"]))
    print(json.dumps({**paths, "bayes_oracle_accuracy": oracle}))
    return 0


def _cmd_eval(args) -> int:
    from .evaluate import ablate_covariance, compare_strategies, improvement_curve, run_once

    spec, header, records = _load_pair(args.stream, args.classifier)
    records = list(records)
    cfg = _config_from_args(args)
    if args.what == "improvement":
        report = run_once(records, spec, cfg, strategy=args.strategy,
                          seed=args.seed, window=args.window)
        payload = {"improvement_curve": improvement_curve(report.rows,
                                                          args.window),
                   "summary": report.summary}
    elif args.what == "ablate-cov":
        full, frozen = ablate_covariance(records, spec, cfg, seed=args.seed,
                                         window=args.window)
        payload = {"full": full.summary, "frozen": frozen.summary,
                   "delta": full.summary["overall_acc"]
                   - frozen.summary["overall_acc"]}
    else:  # strategies
        gammas = [float(g) for g in args.gammas.split(",")]
        payload = {"table": compare_strategies(records, spec, cfg,
                                               gammas=gammas, seed=args.seed,
                                               window=args.window)}
    text = json.dumps(payload, indent=2)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    print(text)
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    from .serve import SessionRunner, create_app

    spec, header, records = _load_pair(args.stream, args.classifier)
    cfg = _config_from_args(args)
    runner = SessionRunner(spec, cfg, list(records), strategy=args.strategy,
                           seed=args.seed, window=args.window,
                           report_path=args.report)
    app = create_app(runner, static_dir=args.static_dir)
    runner.start()
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dota",
        description="Streaming test-time adaptation for zero-shot "
                    "embedding classifiers")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="adapt over a stream file")
    p_run.add_argument("--stream", required=True)
    p_run.add_argument("--classifier", required=True)
    _add_hyper_flags(p_run)
    p_run.add_argument("--checkpoint", help="write a checkpoint when done")
    p_run.add_argument("--resume", help="resume from a checkpoint file")
    p_run.add_argument("--stop-after", type=int, default=None,
                       help="process at most this many additional samples")
    p_run.add_argument("--report", help="write a JSON-lines report")
    p_run.add_argument("--window", type=int, default=500)
    p_run.set_defaults(func=_cmd_run)

    p_synth = sub.add_parser("synth", help="generate a synthetic stream")
    p_synth.add_argument("--k", type=int, default=5)
    p_synth.add_argument("--d", type=int, default=16)
    p_synth.add_argument("--n", type=int, default=5000)
    p_synth.add_argument("--perturb-deg", type=float, default=25.0)
    aniso = p_synth.add_mutually_exclusive_group()
    aniso.add_argument("--aniso", dest="aniso", action="store_true",
                       default=True)
    aniso.add_argument("--iso", dest="aniso", action="store_false")
    from .synth import (DEFAULT_CONE_DEG, DEFAULT_EIG_HI, DEFAULT_EIG_LO,
                        DEFAULT_EIG_MID, DEFAULT_ISO_EIG, DEFAULT_TAU)
    p_synth.add_argument("--seed", type=int, default=7)
    p_synth.add_argument("--cone-deg", type=float, default=DEFAULT_CONE_DEG)
    p_synth.add_argument("--eig-lo", type=float, default=DEFAULT_EIG_LO)
    p_synth.add_argument("--eig-hi", type=float, default=DEFAULT_EIG_HI)
    p_synth.add_argument("--eig-mid", type=float, default=DEFAULT_EIG_MID)
    p_synth.add_argument("--iso-eig", type=float, default=DEFAULT_ISO_EIG)
    p_synth.add_argument("--tau", type=float, default=DEFAULT_TAU)
    p_synth.add_argument("--balance", help="comma-separated class weights")
    p_synth.add_argument("--out-prefix", required=True)
    p_synth.set_defaults(func=_cmd_synth)

    p_eval = sub.add_parser("eval", help="analysis runs")
    p_eval.add_argument("what", choices=["improvement", "ablate-cov",
                                         "strategies"])
    p_eval.add_argument("--stream", required=True)
    p_eval.add_argument("--classifier", required=True)
    _add_hyper_flags(p_eval)
    p_eval.add_argument("--window", type=int, default=500)
    p_eval.add_argument("--gammas", default="0.05,0.15")
    p_eval.add_argument("--out")
    p_eval.set_defaults(func=_cmd_eval)

    p_serve = sub.add_parser("serve", help="run a session behind the "
                                           "labeling HTTP service")
    p_serve.add_argument("--stream", required=True)
    p_serve.add_argument("--classifier", required=True)
    _add_hyper_flags(p_serve)
    p_serve.set_defaults(feedback="human")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8787)
    p_serve.add_argument("--static-dir", help="serve a UI bundle at /")
    p_serve.add_argument("--report", help="write a JSON-lines report when done")
    p_serve.add_argument("--window", type=int, default=500)
    p_serve.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DotaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
