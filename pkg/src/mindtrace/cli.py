"""Command line front end.

Every subcommand reads its inputs, runs one pipeline and writes a single
JSON output file of the form `{"header": {...}, ...}`. The header records
tool version, config hash, seed and subcommand, and carries no timestamps
so identical runs give byte-identical files. Trained model files are
written in their own format.

Exit codes: 0 on success, 2 for usage and input errors, 3 for backend
failures, 4 for anything unexpected.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

from mindtrace import __version__
from mindtrace.config import ConfigException, RunConfig, config_hash, load_config, with_overrides
from mindtrace.ensemble.change import ChangeModel, detect_changes_tree, train_change_models
from mindtrace.ensemble.presence import PresenceModels, predict_annotations, train_presence_models
from mindtrace.ensemble.tree import EnsembleException
from mindtrace.evaluation import (
    EvaluationException,
    annotation_predictions,
    change_predictions,
    correlation,
    kfold_split,
    load_task1_rankings,
    load_task31_rankings,
    rank_average,
    read_records,
    render_report_text,
    summary_texts,
    task1_classification_report,
    task1_presence_report,
    task2_report,
    task31_report,
)
from mindtrace.evaluation.stats import PEARSON, SPEARMAN
from mindtrace.evaluation.summary import TASK31_HIGHER_IS_BETTER
from mindtrace.features.temporal import load_embeddings
from mindtrace.features.text import FeatureException, load_lexicon
from mindtrace.llm.client import BackendConfig, InferenceClient, TransportException
from mindtrace.llm.pipelines import PipelineException, augment_corpus, detect_changes_llm_many, summarize_llm
from mindtrace.llm.prompts import FewShotSelector, PromptException, load_fewshot_bank, load_summary_examples
from mindtrace.llm.templater import TemplateException, Templater, set_templater
from mindtrace.llm.validation import ValidationExhaustedException
from mindtrace.logger import logger
from mindtrace.miner.dynamics import MinerException, bundles_from_timelines, mine_signatures
from mindtrace.model.schema import LabelSchema, SchemaException, load_schema
from mindtrace.model.timeline import Timeline, TimelineException, load_timelines
from mindtrace.summarizer.template import SummarizerException, summarize_template
from mindtrace.tagger.llr import TaggerException
from mindtrace.tagger.signatures import (
    LabeledCorpus,
    build_corpus,
    extract_signatures,
    load_signatures,
    tag_post,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_BACKEND = 3
EXIT_INTERNAL = 4

USAGE_ERRORS = (
    SchemaException,
    TimelineException,
    FeatureException,
    TaggerException,
    EnsembleException,
    EvaluationException,
    ConfigException,
    MinerException,
    SummarizerException,
    PromptException,
    TemplateException,
)
BACKEND_ERRORS = (TransportException, ValidationExhaustedException)


class UsageException(Exception):
    """Raised for missing input files and option combinations that can't work."""


class Context:
    """Resolved config plus the loaders every subcommand shares."""

    def __init__(self, args: argparse.Namespace, config: RunConfig) -> None:
        self.args = args
        self.config = config
        self._schema: LabelSchema | None = None

    @property
    def schema(self) -> LabelSchema:
        if self._schema is None:
            path = self.config.paths.schema
            self._schema = load_schema(existing(path) if path else None)
        return self._schema

    def timelines(self, path: str) -> list[Timeline]:
        timelines = load_timelines(existing(path), self.schema)
        return sorted(timelines, key=lambda t: t.timeline_id)

    def client(self) -> InferenceClient:
        backend: BackendConfig = self.config.backend
        if not backend.configured:
            raise UsageException(
                "LLM mode needs an endpoint URL and a model name (--llm-url/--llm-model, "
                "MINDTRACE_LLM_URL/MINDTRACE_LLM_MODEL or the config file)"
            )
        return InferenceClient(backend)

    def header(self) -> dict[str, Any]:
        return {
            "tool": "mindtrace",
            "version": __version__,
            "command": self.args.command,
            "config_hash": config_hash(self.config),
            "seed": self.config.seed,
        }

    def write(self, payload: dict[str, Any]) -> None:
        """Write `payload` under a provenance header, unless this is a dry run."""
        output = self.args.output
        if self.args.dry_run:
            logger.info(f"Dry run, not writing {output}")
            return
        text = json.dumps({"header": self.header(), **payload}, indent=2, ensure_ascii=False) + "\n"
        Path(output).write_text(text, encoding="utf-8")
        logger.info(f"Wrote {output}")

    def write_model(self, save: Callable[[str], None]) -> None:
        if self.args.dry_run:
            logger.info(f"Dry run, not writing {self.args.output}")
            return
        save(self.args.output)


def existing(path: str) -> str:
    if not Path(path).is_file():
        raise UsageException(f"No such file: {path}")
    return path


def cmd_tag(ctx: Context) -> None:
    signatures = load_signatures(existing(ctx.args.signatures), ctx.schema)
    timelines = ctx.timelines(ctx.args.input)
    records = [
        {
            "timeline_id": timeline.timeline_id,
            "post_id": post.post_id,
            "position": post.position,
            "labels": [label.to_dict() for label in sorted(tag_post(post, signatures, ctx.config.tagger))],
        }
        for timeline in timelines
        for post in timeline.posts
    ]
    ctx.write({"records": records})


def cmd_score_presence(ctx: Context) -> None:
    signatures = load_signatures(existing(ctx.args.signatures), ctx.schema)
    models = PresenceModels.load(existing(ctx.args.models))
    records = []
    for timeline in ctx.timelines(ctx.args.input):
        annotations = predict_annotations(timeline, signatures, models, ctx.config.tagger, ctx.schema)
        for post, annotation in zip(timeline.posts, annotations):
            records.append(
                {
                    "timeline_id": timeline.timeline_id,
                    "post_id": post.post_id,
                    "position": post.position,
                    "labels": [label.to_dict() for label in sorted(annotation.labels)],
                    "adaptive_presence": annotation.adaptive_presence,
                    "maladaptive_presence": annotation.maladaptive_presence,
                }
            )
    ctx.write({"records": records})


def cmd_augment(ctx: Context) -> None:
    corpus = build_corpus(ctx.timelines(ctx.args.input), ctx.schema)
    with ctx.client() as client:
        augmented = augment_corpus(corpus, client, ctx.schema, n_new=ctx.args.n_new, jobs=ctx.config.jobs)
    ctx.write({"corpus": augmented.to_dict()})


def cmd_extract_signatures(ctx: Context) -> None:
    if ctx.args.corpus:
        try:
            data = json.loads(Path(existing(ctx.args.corpus)).read_bytes())
        except json.JSONDecodeError as e:
            raise UsageException(f"Corpus file {ctx.args.corpus} is not valid JSON: {e}") from e
        if not isinstance(data, dict):
            raise UsageException(f"Corpus file {ctx.args.corpus} must hold a JSON object")
        corpus = LabeledCorpus.from_dict(data.get("corpus", data), ctx.schema)
    elif ctx.args.input:
        corpus = build_corpus(ctx.timelines(ctx.args.input), ctx.schema)
    else:
        raise UsageException("Need annotated timelines or a corpus file (--corpus)")
    signatures = extract_signatures(corpus, ctx.config.tagger)
    ctx.write_model(lambda path: Path(path).write_text(signatures.to_json() + "\n", encoding="utf-8"))


def cmd_train_presence(ctx: Context) -> None:
    models = train_presence_models(ctx.timelines(ctx.args.input), ctx.config.training, ctx.schema)
    ctx.write_model(models.save)


def _lexicon(ctx: Context):
    paths = ctx.config.paths
    return load_lexicon(paths.negative_lexicon, paths.positive_lexicon)


def _embeddings(ctx: Context):
    return load_embeddings(existing(ctx.args.embeddings)) if ctx.args.embeddings else None


def cmd_train_change(ctx: Context) -> None:
    model = train_change_models(
        ctx.timelines(ctx.args.input),
        ctx.config.training,
        ctx.config.tfidf,
        _embeddings(ctx),
        _lexicon(ctx),
    )
    ctx.write_model(model.save)


def cmd_detect(ctx: Context) -> None:
    timelines = ctx.timelines(ctx.args.input)
    if ctx.args.mode == "tree":
        if not ctx.args.model:
            raise UsageException("Tree mode needs a trained change model (--model)")
        model = ChangeModel.load(existing(ctx.args.model))
        embeddings, lexicon = _embeddings(ctx), _lexicon(ctx)
        predictions = [detect_changes_tree(t, model, embeddings, lexicon) for t in timelines]
    else:
        bank = load_fewshot_bank(ctx.config.paths.fewshot)
        with ctx.client() as client:
            predictions = detect_changes_llm_many(
                timelines, bank, client, ctx.config.window_size, ctx.config.jobs
            )
    ctx.write({"records": [p.to_dict() for timeline in predictions for p in timeline]})


def cmd_summarize(ctx: Context) -> None:
    timelines = ctx.timelines(ctx.args.input)
    if ctx.args.mode == "template":
        records = summarize_template(timelines, ctx.config.summarizer, ctx.config.jobs)
    else:
        selector = FewShotSelector(load_summary_examples(ctx.config.paths.summary_examples), ctx.args.shots)
        with ctx.client() as client:
            summaries = summarize_llm(timelines, client, selector, jobs=ctx.config.jobs)
        records = [summary.to_dict() for summary in summaries]
    ctx.write({"records": records})


def cmd_mine_signatures(ctx: Context) -> None:
    summaries = summary_texts(read_records(existing(ctx.args.summaries))) if ctx.args.summaries else None
    bundles = bundles_from_timelines(ctx.timelines(ctx.args.input), summaries)
    with ctx.client() as client:
        result = mine_signatures(bundles, client, ctx.config.miner, ctx.config.summarizer, ctx.config.jobs)
    ctx.write(result.to_dict())


def cmd_split_kfold(ctx: Context) -> None:
    ids = [timeline.timeline_id for timeline in ctx.timelines(ctx.args.input)]
    folds = kfold_split(ids, ctx.args.k, ctx.config.seed)
    ctx.write({"records": [{"fold": idx, "ids": fold} for idx, fold in enumerate(folds)]})


def cmd_evaluate(ctx: Context) -> None:
    task = ctx.args.task
    predictions = read_records(existing(ctx.args.pred))

    if task == "3":
        references = summary_texts(read_records(existing(ctx.args.gold)))
        report = task31_report(summary_texts(predictions), references).to_dict()
        print(
            f"ROUGE-L recall, mean over {len(report['per_sequence'])} summaries "
            f"(one metric of the rank-averaged summary score): {report['mean_rouge_l_recall']:.4f}"
        )
    else:
        timelines = ctx.timelines(ctx.args.gold)
        if task == "1":
            annotations = annotation_predictions(predictions, ctx.schema)
            report = {"classification": task1_classification_report(annotations, timelines, ctx.schema).to_dict()}
            print(f"final macro F1: {report['classification']['final']:.4f}")
            if any(a.adaptive_presence is not None or a.maladaptive_presence is not None for a in annotations.values()):
                report["presence"] = task1_presence_report(annotations, timelines).to_dict()
                print(f"ranking RMSE: {report['presence']['ranking_score']:.4f}")
        else:
            report = task2_report(change_predictions(predictions), timelines).to_dict()
            print(f"final F1: {report['final']:.4f}")

    ctx.write({"report": report})
    if ctx.args.text_report and not ctx.args.dry_run:
        Path(ctx.args.text_report).write_text(render_report_text(report, ctx.header()), encoding="utf-8")


def cmd_rankings(ctx: Context) -> None:
    task1 = load_task1_rankings(Path(existing(ctx.args.task1)).read_text(encoding="utf-8") if ctx.args.task1 else None)
    task31 = load_task31_rankings(
        Path(existing(ctx.args.task31)).read_text(encoding="utf-8") if ctx.args.task31 else None
    )

    xs, ys = [row.macro_f1 for row in task1], [row.rmse for row in task1]
    correlations = {method: correlation(xs, ys, method).to_dict() for method in (PEARSON, SPEARMAN)}
    pearson = correlations[PEARSON]
    print(f"Macro F1 vs RMSE: r = {pearson['r']:.4f}, p = {pearson['p']:.4g} (n = {pearson['n']})")

    names = [f"{row.team} ({row.submission_id})" for row in task31]
    by_ranks = rank_average({n: row.ranks for n, row in zip(names, task31)}, [False] * 4)
    by_scores = rank_average({n: row.scores for n, row in zip(names, task31)}, TASK31_HIGHER_IS_BETTER)

    ctx.write(
        {
            "correlation": correlations,
            "rank_average": {
                "from_ranks": [s.to_dict() for s in by_ranks],
                "from_scores": [s.to_dict() for s in by_scores],
            },
        }
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="YAML config file")
    common.add_argument("--seed", type=int, help="random seed (overrides the config)")
    common.add_argument("-j", "--jobs", type=int, help="worker threads (overrides the config)")
    common.add_argument("--dry-run", action="store_true", help="validate inputs, write nothing")
    common.add_argument("--llm-url", help="chat completion endpoint URL")
    common.add_argument("--llm-model", help="model name sent to the endpoint")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug output")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="mindtrace",
        description="Self-state tagging, change detection, summarization and evaluation for post timelines.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def command(name: str, func: Callable[[Context], None], help_text: str, output: bool = True):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        if output:
            p.add_argument("-o", "--output", required=True, help="output file")
        p.set_defaults(func=func)
        return p

    p = command("tag", cmd_tag, "assign self-state labels with n-gram signatures")
    p.add_argument("input", help="timelines JSON")
    p.add_argument("-s", "--signatures", required=True, help="signature file")

    p = command("score-presence", cmd_score_presence, "tag posts and rate their adaptive/maladaptive presence")
    p.add_argument("input", help="timelines JSON")
    p.add_argument("-s", "--signatures", required=True, help="signature file")
    p.add_argument("-m", "--models", required=True, help="presence model file")

    p = command("augment", cmd_augment, "generate additional evidence texts per label with the LLM")
    p.add_argument("input", help="annotated timelines JSON")
    p.add_argument("-n", "--n-new", type=int, default=5, help="texts to generate per label")

    p = command("extract-signatures", cmd_extract_signatures, "extract n-gram signatures per label")
    p.add_argument("input", nargs="?", help="annotated timelines JSON")
    p.add_argument("--corpus", help="use an (augmented) corpus file instead of the timelines")

    p = command("train-presence", cmd_train_presence, "train the presence regressors")
    p.add_argument("input", help="annotated timelines JSON")

    p = command("train-change", cmd_train_change, "train the Switch/Escalation classifiers")
    p.add_argument("input", help="annotated timelines JSON")
    p.add_argument("--embeddings", help="JSON-lines post embeddings, TF-IDF if omitted")

    p = command("detect", cmd_detect, "detect Switch/Escalation per post")
    p.add_argument("input", help="timelines JSON")
    p.add_argument("--mode", choices=["tree", "llm"], default="tree")
    p.add_argument("-m", "--model", help="change model file (tree mode)")
    p.add_argument("--embeddings", help="JSON-lines post embeddings (tree mode)")

    p = command("summarize", cmd_summarize, "summarize each timeline")
    p.add_argument("input", help="timelines JSON")
    p.add_argument("--mode", choices=["template", "llm"], default="template")
    p.add_argument("--shots", type=int, default=2, help="few-shot examples per prompt (llm mode)")

    p = command("mine-signatures", cmd_mine_signatures, "mine dynamic signatures of improvement and deterioration")
    p.add_argument("input", help="annotated timelines JSON")
    p.add_argument("--summaries", help="summaries file to include in the sequence blocks")

    p = command("split-kfold", cmd_split_kfold, "split timeline ids into K folds")
    p.add_argument("input", help="timelines JSON")
    p.add_argument("-k", type=int, default=5, help="number of folds")

    p = command("evaluate", cmd_evaluate, "score predictions against gold data")
    p.add_argument("--task", choices=["1", "2", "3"], required=True)
    p.add_argument("--pred", required=True, help="prediction file")
    p.add_argument("--gold", required=True, help="gold timelines JSON, or reference summaries for task 3")
    p.add_argument("--text-report", help="also write an aligned-column text report")

    p = command("rankings", cmd_rankings, "correlation and rank averages over the shared-task ranking tables")
    p.add_argument("--task1", help="element/presence ranking CSV, bundled table if omitted")
    p.add_argument("--task31", help="summary ranking CSV, bundled table if omitted")

    return parser


def setup_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def exit_code(error: BaseException) -> int:
    if isinstance(error, BACKEND_ERRORS):
        return EXIT_BACKEND
    if isinstance(error, PipelineException):
        return EXIT_BACKEND if isinstance(error.__cause__, BACKEND_ERRORS) else EXIT_INTERNAL
    if isinstance(error, USAGE_ERRORS + (UsageException,)):
        return EXIT_USAGE
    return EXIT_INTERNAL


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args)

    try:
        config = with_overrides(
            load_config(args.config), args.llm_url, args.llm_model, args.seed, args.jobs
        )
        if config.paths.templates:
            set_templater(Templater(config.paths.templates))
        args.func(Context(args, config))
    except Exception as e:
        code = exit_code(e)
        if code == EXIT_INTERNAL:
            logger.exception(f"Internal error: {e}")
        else:
            logger.error(str(e))
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
