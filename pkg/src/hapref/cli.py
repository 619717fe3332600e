"""Command-line entry points.

    hapref serve     run the session service
    hapref simulate  run synthetic participants end to end
    hapref estimate  dataset CSV -> estimate CSV
    hapref schedule  ratings CSV -> trial + omission CSVs
    hapref analyze   before/after CSVs -> report directory
    hapref catalog   export the stimulus catalog or one trajectory
"""

from __future__ import annotations

import csv
import json
import os

import click

from .analysis import ParticipantResult, report
from .btmodel import ComparisonDataset, estimate_ilsr, estimate_mm, write_estimate_csv
from .config import load_config
from .protocol import build_schedule
from .simulation import run_cohort, paper_like_participant, SyntheticParticipant
from .stimuli import default_catalog, write_catalog_csv, write_trajectory_csv, catalog_json


@click.group()
def main():
    """Preference elicitation for mid-air haptic stimuli."""


@main.command()
@click.option("--port", type=int, default=None, help="Listen port (overrides config).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", default=None, help="Session storage directory.")
@click.option("--presenter", "presenter_sink", type=click.Choice(["log", "file", "stream"]),
              default=None, help="Presentation sink (overrides config).")
@click.option("--config", "config_path", default=None, help="INI config file.")
def serve(port, host, data_dir, presenter_sink, config_path):
    """Run the session service."""
    import uvicorn
    from dataclasses import replace

    from .service import create_app

    config = load_config(config_path)
    if port is not None:
        config = replace(config, service=replace(config.service, port=port))
    if data_dir is not None:
        config = replace(config, service=replace(config.service, data_dir=data_dir))
    if presenter_sink is not None:
        config = replace(config, presenter=replace(config.presenter, sink=presenter_sink))
    uvicorn.run(create_app(config), host=host, port=config.service.port)


@main.command()
@click.option("--participants", "-n", type=int, default=10, show_default=True)
@click.option("--noise", type=float, default=0.1, show_default=True,
              help="Rating noise SD on the latent utility scale.")
@click.option("--temperature", type=float, default=0.15, show_default=True,
              help="Choice temperature; lower is more deterministic.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--deterministic", is_flag=True, help="Noise-free forced choices.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--config", "config_path", default=None)
def simulate(participants, noise, temperature, seed, deterministic, out_dir, config_path):
    """Run synthetic participants through the whole pipeline."""
    from .protocol import events_to_jsonl

    config = load_config(config_path)

    def factory(k):
        base = paper_like_participant(k)
        return SyntheticParticipant(
            utilities=base.utilities, choice_temperature=temperature,
            rating_noise_sd=noise, seed=k, deterministic_choice=deterministic)

    summary, sessions = run_cohort(
        participants, base_seed=seed, participant_factory=factory,
        schedule_config=config.schedule, bt=config.bt, keep_sessions=True)

    os.makedirs(out_dir, exist_ok=True)
    for session, result in zip(sessions, summary.results):
        session_dir = os.path.join(out_dir, session.session_id)
        os.makedirs(session_dir, exist_ok=True)
        with open(os.path.join(session_dir, "events.ndjson"), "w") as fp:
            fp.write(events_to_jsonl(session.events))
        session.assemble_dataset().write_csv(os.path.join(session_dir, "dataset.csv"))
        estimate = estimate_ilsr(session.assemble_dataset(), alpha=config.bt.alpha,
                                 tol=config.bt.tol, max_iter=config.bt.max_iter,
                                 normalize_on=config.bt.normalize_on)
        write_estimate_csv(os.path.join(session_dir, "estimate.csv"), estimate,
                           alpha=config.bt.alpha, tol=config.bt.tol)

    report(summary.results, os.path.join(out_dir, "report"), formats=("csv", "png"))
    aggregate = {
        "participants": participants,
        "mean_r": summary.mean_r,
        "mean_trials": summary.mean_trials,
        "mean_kendall_tau": summary.mean_tau,
        "trial_counts": summary.trial_counts,
    }
    with open(os.path.join(out_dir, "summary.json"), "w") as fp:
        json.dump(aggregate, fp, indent=2)
    click.echo(f"{participants} sessions: mean r={summary.mean_r:.3f}, "
               f"mean trials={summary.mean_trials:.1f}, "
               f"mean tau={summary.mean_tau:.3f}")
    click.echo(f"outputs in {out_dir}")


@main.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--estimator", type=click.Choice(["ilsr", "mm"]), default="ilsr",
              show_default=True)
@click.option("--n-items", type=int, default=None,
              help="Item count; inferred from the data when omitted.")
@click.option("--alpha", type=float, default=None)
@click.option("--config", "config_path", default=None)
def estimate(dataset_path, out_path, estimator, n_items, alpha, config_path):
    """Estimate strengths from a winner,loser,provenance CSV."""
    config = load_config(config_path)
    alpha = config.bt.alpha if alpha is None else alpha
    dataset = ComparisonDataset.read_csv(dataset_path, n_items=n_items)
    fn = estimate_ilsr if estimator == "ilsr" else estimate_mm
    result = fn(dataset, alpha=alpha, tol=config.bt.tol, max_iter=config.bt.max_iter,
                normalize_on=config.bt.normalize_on)
    write_estimate_csv(out_path, result, alpha=alpha, tol=config.bt.tol)
    click.echo(f"estimated {dataset.n_items} items from {len(dataset.outcomes)} outcomes "
               f"({'converged' if result.converged else 'NOT converged'} "
               f"after {result.iterations} iterations)")


@main.command()
@click.option("--ratings", "ratings_path", required=True, type=click.Path(exists=True),
              help="CSV with header stimulus_id,rating[,is_anchor].")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-trials", required=True, type=click.Path())
@click.option("--out-omitted", required=True, type=click.Path())
@click.option("--config", "config_path", default=None)
def schedule(ratings_path, seed, out_trials, out_omitted, config_path):
    """Build the comparison schedule for a completed rating sheet."""
    config = load_config(config_path)
    ratings: dict[int, int] = {}
    with open(ratings_path, newline="") as fp:
        for row in csv.DictReader(fp):
            ratings[int(row["stimulus_id"])] = int(row["rating"])
    built = build_schedule(ratings, seed, config.schedule.repeats_by_gap)
    with open(out_trials, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["trial_index", "id_a", "id_b", "winner_id"])
        for idx, trial in enumerate(built.trials):
            writer.writerow([idx, trial.id_left, trial.id_right, ""])
    with open(out_omitted, "w", newline="") as fp:
        writer = csv.writer(fp)
        writer.writerow(["id_a", "id_b", "implied_winner"])
        for om in built.omitted:
            writer.writerow([om.pair[0], om.pair[1], om.implied_winner])
    counts = built.pairs_by_repetition()
    click.echo(f"{built.total_trials} trials "
               f"({counts.get(2, 0)} pairs twice, {counts.get(1, 0)} once, "
               f"{built.omitted_pairs} omitted)")


@main.command()
@click.option("--before", "before_path", required=True, type=click.Path(exists=True),
              help="CSV with header participant_id,stimulus_id,rating.")
@click.option("--after", "after_path", required=True, type=click.Path(exists=True),
              help="CSV with header participant_id,stimulus_id,score.")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--plots/--no-plots", default=True, show_default=True)
def analyze(before_path, after_path, out_dir, plots):
    """Correlations, mean absolute differences and per-stimulus aggregates."""
    def read_series(path, value_column):
        series: dict[str, dict[int, float]] = {}
        with open(path, newline="") as fp:
            for row in csv.DictReader(fp):
                series.setdefault(row["participant_id"], {})[int(row["stimulus_id"])] = \
                    float(row[value_column])
        return series

    before = read_series(before_path, "rating")
    after = read_series(after_path, "score")
    if sorted(before) != sorted(after):
        raise click.ClickException("participant ids differ between before and after files")
    results = []
    for pid in sorted(before):
        ids = sorted(before[pid])
        if ids != sorted(after[pid]):
            raise click.ClickException(f"stimulus ids differ for participant {pid}")
        results.append(ParticipantResult.from_vectors(
            pid, [before[pid][i] for i in ids], [after[pid][i] for i in ids]))
    formats = ("csv", "png") if plots else ("csv",)
    written = report(results, out_dir, formats=formats)
    for res in results:
        click.echo(f"{res.participant_id}: r={res.r:.3f} mad={res.mad:.3f}")
    click.echo(f"wrote {len(written)} files to {out_dir}")


@main.command()
@click.option("--out", "out_path", default=None, type=click.Path(),
              help="CSV destination for the catalog table.")
@click.option("--json", "as_json", is_flag=True, help="Print the catalog as JSON.")
@click.option("--trajectory", type=int, default=None, metavar="STIMULUS_ID",
              help="Export this stimulus's trajectory instead.")
def catalog(out_path, as_json, trajectory):
    """Export the stimulus catalog (or one stimulus's trajectory) as a table."""
    specs = default_catalog()
    if trajectory is not None:
        if out_path is None:
            raise click.ClickException("--trajectory requires --out")
        write_trajectory_csv(out_path, specs[trajectory])
        click.echo(f"wrote trajectory of stimulus {trajectory} to {out_path}")
        return
    if as_json:
        click.echo(catalog_json(specs))
        return
    if out_path is None:
        raise click.ClickException("pass --out or --json")
    write_catalog_csv(out_path, specs)
    click.echo(f"wrote catalog to {out_path}")


if __name__ == "__main__":
    main()
