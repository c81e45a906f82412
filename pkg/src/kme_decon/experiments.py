"""Desk-scale experiment runners behind the command line.

Each runner takes a resolved config and returns a :class:`Report` of tables
and JSON documents. Nothing here reads clocks, so reports are reproducible
bit for bit from ``(config, seed)``.
"""

from typing import NamedTuple

import numpy as np

from .dme import dme_fit
from .equivalence import CHECKS, run_suite
from .errors import ConfigError
from .kernels import KernelSpec
from .lfi import (ExpGammaSetup, exp_gamma_problem, learn_lfi_hyper, run_posterior)
from .ttgp import (TtgpHyper, default_bounds, inducing_dataset, learn_inducing, optimize_hyper,
                   posterior_predict, sparse_nlml)
from .ttr_data import (TOY_ANCHORS, cascade_baseline, generate_ttr, impute_baseline, latent,
                       toy_function, toy_gp_process)


class Report(NamedTuple):
    tables: dict       # file name -> (header, rows)
    documents: dict    # file name -> JSON-serialisable object
    checks: dict       # contract name -> bool


def hyper_from_config(block):
    return TtgpHyper(KernelSpec.from_dict(block["kernel_k"]), KernelSpec.from_dict(block["kernel_l"]),
                     block["sigma2"])


def probe_grid(block):
    return np.linspace(block["low"], block["high"], block["size"])


def trace_table(trace, value_name="nlml", sign=1.0):
    rows = [[i, *p, sign * v] for i, (p, v) in enumerate(zip(trace.params, trace.values))]
    return ["eval_index", *trace.names, value_name], rows


def rmse(pred, truth):
    return float(np.sqrt(np.mean((np.asarray(pred) - truth) ** 2)))


def run_ttr(cfg):
    """Task-transformed regression with learned TTGP hyperparameters versus two baselines."""
    seed = cfg["seed"]
    ds = generate_ttr(cfg["n"], cfg["m"], seed, cfg["noise_sd"])
    init = hyper_from_config(cfg["init"])
    opt = cfg["optimizer"]
    bounds = default_bounds(init.log_params(), opt["log_bounds_halfwidth"])
    fit = optimize_hyper(ds, init, bounds, opt["budget"], opt["restarts"], seed)
    xq = probe_grid(cfg["probe"])
    truth = latent(xq)
    before = posterior_predict(ds, init, xq)
    after = posterior_predict(ds, fit.hyper, xq)
    cascade = cascade_baseline(ds, cfg["baseline_budget"], seed)(xq)
    impute = impute_baseline(ds, cfg["baseline_budget"], seed)(xq)
    header = ["x", "f_true", "dme_init_mean", "dme_init_sd", "dme_learned_mean",
              "dme_learned_sd", "cascade", "impute"]
    rows = np.column_stack([xq, truth, before.mean, before.sd, after.mean, after.sd, cascade, impute])
    lam, eps = fit.hyper.dme_regularizers(ds.n, ds.m)
    model = dme_fit(ds, fit.hyper.kernel_k, fit.hyper.kernel_l, lam, eps)
    metrics = {
        "rmse": {"dme_init": rmse(before.mean, truth), "dme_learned": rmse(after.mean, truth),
                 "cascade": rmse(cascade, truth), "impute": rmse(impute, truth)},
        "nlml": {"init": fit.nlml_init, "learned": fit.nlml},
        "band_sd": cfg["band_sd"],
        "learned_hyper": fit.hyper.to_dict(),
        "n_evaluations": len(fit.trace),
    }
    return Report(
        tables={"probe.csv": (header, rows.tolist()), "nlml_trace.csv": trace_table(fit.trace)},
        documents={"metrics.json": metrics, "model.json": model.to_dict()},
        checks={"learned_nlml_not_worse": fit.nlml <= fit.nlml_init},
    )


def run_sparse(cfg):
    """Inducing-point learning on the five-anchor toy process."""
    seed = cfg["seed"]
    y, z = toy_gp_process(cfg["m"], seed)
    k = cfg["n_inducing"]
    if cfg["init_points"] == "data":
        u0 = y[:k, None].copy()
    else:
        u0 = np.sort(np.random.default_rng(seed).uniform(y.min(), y.max(), k))[:, None]
    init = hyper_from_config(cfg["init"])
    true = hyper_from_config(cfg["true_hyper"])
    opt = cfg["optimizer"]
    common = dict(budget=opt["budget"], restarts=opt["restarts"], seed=seed)
    joint = learn_inducing(y, z, k, u0, init, learn_hyper=True, tie_kernels=cfg["tie_kernels"],
                           halfwidth=opt["log_bounds_halfwidth"], **common)
    fixed = learn_inducing(y, z, k, u0, true, learn_hyper=False, **common)

    def predict(points, hyper):
        ds = inducing_dataset(points, y, z)
        lam, eps = hyper.dme_regularizers(ds.n, ds.m)
        return dme_fit(ds, hyper.kernel_k, hyper.kernel_l, lam, eps, form="woodbury")

    yq = probe_grid(cfg["probe"])
    preds = np.column_stack([yq, toy_function(yq), predict(u0, init).predict(yq),
                             joint.model(y, z).predict(yq), fixed.model(y, z).predict(yq)])
    points = [["random", i, float(u0[i, 0])] for i in range(k)]
    points += [["joint", i, float(joint.points[i, 0])] for i in range(k)]
    points += [["fixed_hyper", i, float(fixed.points[i, 0])] for i in range(k)]
    nlml_random = sparse_nlml(u0, y, z, init)
    nlml_random_true = sparse_nlml(u0, y, z, true)
    metrics = {
        "nlml": {"random_init_hyper": nlml_random, "joint": joint.nlml,
                 "random_true_hyper": nlml_random_true, "fixed_hyper": fixed.nlml},
        "joint_hyper": joint.hyper.to_dict(),
        "tie_kernels": cfg["tie_kernels"],
        "rmse_vs_truth": {"random": rmse(preds[:, 2], preds[:, 1]),
                          "joint": rmse(preds[:, 3], preds[:, 1]),
                          "fixed_hyper": rmse(preds[:, 4], preds[:, 1])},
    }
    if k == len(TOY_ANCHORS):
        metrics["nlml"]["true_anchors_true_hyper"] = sparse_nlml(TOY_ANCHORS, y, z, true)
    return Report(
        tables={"inducing_points.csv": (["variant", "index", "u"], points),
                "predictions.csv": (["y", "f_true", "random", "joint", "fixed_hyper"], preds.tolist()),
                "nlml_trace_joint.csv": trace_table(joint.trace),
                "nlml_trace_fixed_hyper.csv": trace_table(fixed.trace)},
        documents={"metrics.json": metrics},
        checks={"joint_not_worse_than_random": joint.nlml <= nlml_random,
                "fixed_not_worse_than_random": fixed.nlml <= nlml_random_true},
    )


def lfi_setup(cfg):
    sim = cfg["simulator"]
    return ExpGammaSetup(sim["prior_shape"], sim["prior_rate"], sim["theta_true"], sim["n_obs"])


def run_lfi(cfg):
    """Exponential-gamma likelihood-free inference with herded super-samples."""
    seed = cfg["seed"]
    setup = lfi_setup(cfg)
    kcfg = cfg["kernels"]
    spec = {name: None if kcfg[name] is None else KernelSpec.from_dict(kcfg[name]) for name in kcfg}
    problem, posterior = exp_gamma_problem(setup, cfg["n"], cfg["m"], seed, lam=cfg["lambda"],
                                           grid_size=cfg["R"], grid_pad=cfg["grid_pad"],
                                           kernel_k=spec["k"], kernel_l=spec["l"],
                                           kernel_lprime=spec["lprime"], delta=cfg["delta"])
    learn = cfg["learn"]
    trace_header, trace_rows = ["eval_index", "q_bar"], []
    q_init = None
    if learn["enabled"]:
        theta0 = np.log(np.concatenate([
            (problem.kernel_k if p == "k" else problem.kernel_l).lengthscales for p in learn["params"]]))
        fit = learn_lfi_hyper(problem, learn["budget"],
                              default_bounds(theta0, learn["log_bounds_halfwidth"]),
                              learn["restarts"], seed, tuple(learn["params"]),
                              tie_lprime=spec["lprime"] is None)
        problem, q_init = fit.problem, fit.q_init
        trace_header, trace_rows = trace_table(fit.trace, "q_bar", sign=-1.0)
    run = run_posterior(problem, posterior, cfg["S"])
    samples = run.herding.super_samples
    counts, edges = np.histogram(samples[:, 0], bins=cfg["histogram_bins"],
                                 range=(problem.grid[0, 0], problem.grid[-1, 0]))
    width = edges[1] - edges[0]
    hist = [[float(edges[i]), float(edges[i + 1]), int(c), float(c) / (samples.shape[0] * width)]
            for i, c in enumerate(counts)]
    sims = [[float(t), float(x), seed, i]
            for i, (t, x) in enumerate(zip(problem.thetas[:, 0], problem.summaries[:, 0]))]
    metrics = {
        "observed_summary": float(problem.observed[0, 0]),
        "true_posterior": {"shape": posterior[0], "rate": posterior[1]},
        "posterior_mean": run.posterior_mean,
        "true_posterior_mean": run.true_mean,
        "posterior_mean_rel_error": run.rel_error,
        "cdf_mae": run.cdf_mae,
        "q_bar": run.q_bar,
        "q_bar_init": q_init,
        "kernels": {"k": problem.kernel_k.to_dict(), "l": problem.kernel_l.to_dict(),
                    "lprime": problem.resolved_lprime.to_dict()},
        "delta": problem.resolved_delta,
        "query_points": "uniform grid over the widened prior-sample range",
    }
    checks = {} if q_init is None else {"learned_q_bar_not_worse": run.q_bar >= q_init}
    return Report(
        tables={"super_samples.csv": (["sample_index", "theta0"],
                                      [[i, float(t)] for i, t in enumerate(samples[:, 0])]),
                "histogram.csv": (["bin_left", "bin_right", "count", "density"], hist),
                "q_bar_trace.csv": (trace_header, trace_rows),
                "simulations.csv": (["theta0", "summary0", "seed", "stream"], sims)},
        documents={"metrics.json": metrics},
        checks=checks,
    )


def run_equivalence(cfg):
    """The cross-form equivalence web as a JSON report."""
    seeds = tuple(range(cfg["seed"], cfg["seed"] + cfg["n_seeds"]))
    names = None if cfg["checks"] is None else set(cfg["checks"])
    unknown = set() if names is None else names - {c[0] for c in CHECKS}
    if unknown:
        raise ConfigError(f"unknown equivalence checks: {sorted(unknown)}")
    results = run_suite(seeds, cfg["perturb"], names)
    report = {"perturb": cfg["perturb"], "checks": [r.to_dict() for r in results],
              "passed": all(r.passed for r in results)}
    return Report(tables={}, documents={"equivalence.json": report},
                  checks={r.name: r.passed for r in results})


RUNNERS = {"ttr": run_ttr, "sparse": run_sparse, "lfi": run_lfi,
           "equivalence-suite": run_equivalence}
