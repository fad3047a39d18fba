#
# Copyright (c) Microsoft Corporation.
# Licensed under the MIT License.
#
"""
A helper class to load the configuration files, parse the command line parameters,
and run one stage of the edmshape pipeline.

It is used in `edmshape_bench.run` module to run the stages from the command line.
"""

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, Union

from edmshape_core.baselines import DEFAULT_ORDER
from edmshape_core.contour import DEFAULT_N_POINTS
from edmshape_core.exceptions import ConfigError
from edmshape_core.losses import LossWeights
from edmshape_core.mds import MdsConfig
from edmshape_core.models import ModelConfig
from edmshape_core.trainer import TrainConfig

from edmshape_bench.config.loader import load_config, validate_config
from edmshape_bench.config.schemas import ConfigSchema
from edmshape_bench.storage import write_json
from edmshape_bench.util import toolkit_version

_LOG_LEVEL = logging.INFO
_LOG_FORMAT = '%(asctime)s %(filename)s:%(lineno)d %(funcName)s %(levelname)s %(message)s'
logging.basicConfig(level=_LOG_LEVEL, format=_LOG_FORMAT)

_LOG = logging.getLogger(__name__)

RUN_RECORD = "run.json"

_RUN_RECORD_SCHEMA = ("https://raw.githubusercontent.com/microsoft/MLOS/main/edmshape_bench/"
                      "edmshape_bench/config/schemas/cli/run-record-schema.json")


@dataclass(frozen=True)
class CliOption:
    """
    One command line flag, also accepted as a config file key.
    """

    name: str
    help: str
    default: Any = None
    type: Optional[Callable[[str], Any]] = None
    flag: bool = False
    nargs: Optional[Union[int, str]] = None
    choices: Optional[Sequence[str]] = None

    def add_to(self, parser: argparse.ArgumentParser) -> None:
        """Register the option under its dashed and underscored spellings."""
        names = [f"--{self.name.replace('_', '-')}"]
        if "_" in self.name:
            names.append(f"--{self.name}")
        text = self.help if self.default is None else f"{self.help} Default: {self._shown_default()}."
        kwargs: Dict[str, Any] = {"dest": self.name, "help": text}
        if self.flag:
            kwargs["action"] = argparse.BooleanOptionalAction
        else:
            kwargs.update({k: v for (k, v) in (("type", self.type), ("nargs", self.nargs),
                                               ("choices", self.choices)) if v is not None})
        parser.add_argument(*names, **kwargs)

    def _shown_default(self) -> str:
        if isinstance(self.default, (list, tuple)):
            return " ".join(str(v) for v in self.default)
        return str(self.default)


_MODEL = ModelConfig()
_TRAIN = TrainConfig()
_WEIGHTS = LossWeights()
_MDS = MdsConfig()

_OPTIONS: Dict[str, CliOption] = {opt.name: opt for opt in (
    # Shared by every command.
    CliOption("out", "Output directory of the stage; run.json is written there.", "edmshape-out"),
    CliOption("seed", "Root seed of every random stream of the stage.", 0, int),
    CliOption("deterministic", "Single-threaded deterministic torch kernels.", False, flag=True),
    CliOption("workers", "Parallel workers for per-object work (-1 uses all cores).", 1, int),
    # Inputs.
    CliOption("root", "Mask dataset root with one subdirectory per class."),
    CliOption("manifest", "Manifest CSV (object_id, label, source_path)."),
    CliOption("contours", "Contour CSV (object_id, point_index, x, y)."),
    CliOption("matrices", "SEDM matrix container written by preprocess."),
    CliOption("checkpoint", "Model checkpoint written by train."),
    CliOption("latents", "Latent CSV written by embed."),
    CliOption("features", "Feature or latent CSV to evaluate."),
    CliOption("resume", "Checkpoint to resume training from."),
    # Datasets.
    CliOption("n_points", "Contour points N, a power of two (64 suits small binary masks).", DEFAULT_N_POINTS, int),
    CliOption("n_per_class", "Synthetic instances per class.", 200, int),
    CliOption("scale_range", "Inclusive range of the random scale factor.", [0.5, 2.0], float, nargs=2),
    CliOption("rotation", "Random rotation of synthetic instances.", True, flag=True),
    CliOption("translation", "Half-width of the random translation range.", 10.0, float),
    CliOption("size_variant", "Generate the two-class dataset that differs only in size.", False, flag=True),
    CliOption("mask_size", "Side of the rasterized mask images written by synth (0 writes none).", 0, int),
    # Model and training; defaults follow the fixed-rate Adam regime with latent size 128.
    CliOption("latent_dim", "Latent code size.", _MODEL.latent_dim, int),
    CliOption("blocks", "Number of stride-2 encoder stages.", _MODEL.blocks, int),
    CliOption("base_channels", "Channels after the stem convolution.", _MODEL.base_channels, int),
    CliOption("padding_mode", "Convolution padding; zeros removes shift equivariance.", _MODEL.padding_mode,
              choices=("circular", "zeros")),
    CliOption("residual", "Projection shortcuts around every stage.", _MODEL.residual, flag=True),
    CliOption("mirror_sum", "Sum encoder features of the input and its mirrored copy.", _MODEL.mirror_sum, flag=True),
    CliOption("epochs", "Training epochs.", _TRAIN.epochs, int),
    CliOption("batch_size", "Mini-batch size.", _TRAIN.batch_size, int),
    CliOption("lr", "Adam learning rate.", _TRAIN.learning_rate, float),
    CliOption("beta", "KL divergence weight.", _WEIGHTS.beta, float),
    CliOption("gamma", "Zero-diagonal penalty weight.", _WEIGHTS.gamma, float),
    CliOption("delta", "Non-negativity penalty weight.", _WEIGHTS.delta, float),
    CliOption("epsilon", "Symmetry penalty weight.", _WEIGHTS.epsilon, float),
    CliOption("index_invariant", "Minimum reconstruction error over all reindexings of the target.",
              _WEIGHTS.index_invariant, flag=True),
    CliOption("checkpoint_every", "Epochs between periodic checkpoints (0 disables them).", 0, int),
    CliOption("augment_reindex", "Redraw a random origin and direction for every training matrix each epoch.", False, flag=True),
    # Descriptors and evaluation.
    CliOption("append_size", "Append the standardized Frobenius norm as a size feature.", False, flag=True),
    CliOption("efd_order", "Number of elliptic Fourier harmonics.", DEFAULT_ORDER, int),
    CliOption("folds", "Stratified cross-validation folds.", 5, int),
    CliOption("l2", "L2 penalty strength of the logistic regression.", 1.0, float),
    CliOption("max_iter", "Iteration cap of the logistic regression solver.", 1000, int),
    CliOption("tol", "Gradient tolerance of the logistic regression solver.", 1e-8, float),
    # Generative probes and outline reconstruction.
    CliOption("count", "Number of prior samples to decode.", 4, int),
    CliOption("norm", "Frobenius norm the sampled outlines are scaled to.", 1.0, float),
    CliOption("svg", "Also write one SVG polyline file per outline.", False, flag=True),
    CliOption("mds_max_iter", "SMACOF iteration cap.", _MDS.max_iter, int),
    CliOption("mds_tol", "SMACOF relative stress tolerance.", _MDS.tol, float),
    CliOption("mds_init", "SMACOF initial configuration.", _MDS.init, choices=("random", "classical")),
    CliOption("mds_n_init", "SMACOF random starts.", _MDS.n_init, int),
    CliOption("n_transforms", "Random similarity transforms per object.", 4, int),
    CliOption("max_objects", "Cap on the number of objects in the invariance report.", 50, int),
    CliOption("seeds", "Seeds of the paired ablation runs.", [0, 1, 2], int, nargs="+"),
)}

_COMMON = ("out", "seed", "deterministic")

_MODEL_KEYS = ("latent_dim", "blocks", "base_channels", "padding_mode", "residual", "mirror_sum")
_TRAIN_KEYS = ("epochs", "batch_size", "lr", "beta", "gamma", "delta", "epsilon", "index_invariant")
_MDS_KEYS = ("mds_max_iter", "mds_tol", "mds_init", "mds_n_init")

COMMAND_OPTIONS: Dict[str, Tuple[str, ...]] = {
    "synth": ("n_per_class", "n_points", "scale_range", "rotation", "translation", "size_variant", "mask_size"),
    "preprocess": ("root", "contours", "manifest", "n_points", "workers"),
    "train": ("matrices", *_MODEL_KEYS, *_TRAIN_KEYS, "checkpoint_every", "resume", "augment_reindex"),
    "embed": ("checkpoint", "matrices", "manifest", "append_size"),
    "reconstruct": ("checkpoint", "latents", "matrices", "svg", *_MDS_KEYS),
    "baseline": ("manifest", "contours", "matrices", "efd_order", "workers"),
    "evaluate": ("features", "folds", "l2", "max_iter", "tol", "workers"),
    "sample": ("checkpoint", "count", "norm", "svg", *_MDS_KEYS),
    "classmeans": ("checkpoint", "latents", "matrices", "svg", *_MDS_KEYS),
    "invariance": ("checkpoint", "contours", "n_transforms", "max_objects"),
    "experiment": ("n_per_class", "n_points", "latent_dim", "blocks", "base_channels", "epochs", "batch_size",
                   "lr", "folds", "seeds", "workers"),
}

_COMMAND_HELP = {
    "synth": "Emit a synthetic dataset (manifest, contours, optional mask images).",
    "preprocess": "Masks or contours to resampled contours and a SEDM matrix container.",
    "train": "Train the distance-matrix VAE on a SEDM container.",
    "embed": "Encode matrices into a latent CSV.",
    "reconstruct": "Decode latents (or matrices) into outlines.",
    "baseline": "Compute classical descriptors: efd, regionprops or distmat.",
    "evaluate": "Cross-validated logistic regression on a feature CSV.",
    "sample": "Decode standard normal latent draws into outlines.",
    "classmeans": "Decode the mean latent code of every class.",
    "invariance": "Latent drift report under similarity transforms, reflection and reindexing.",
    "experiment": ("Desk-scale experiments: desk, ablation or size. Model defaults here are N=32,"
                   " 3 stages, latent size 32 and 8 base channels."),
}

# Positional argument of the commands that take one: (name, allowed values).
_POSITIONALS = {
    "baseline": ("method", ("efd", "regionprops", "distmat")),
    "experiment": ("experiment", ("desk", "ablation", "size")),
}

# Config keys accepted by each command.
_COMMAND_KEYS = {command: (*_COMMON, *options, *((_POSITIONALS[command][0],) if command in _POSITIONALS else ()))
                 for (command, options) in COMMAND_OPTIONS.items()}

_LOGGING_KEYS = ("log_level", "log_file")

# Desk-scale model of the experiments: N=32, 3 stages, latent size 32.
_COMMAND_DEFAULTS: Dict[str, Dict[str, Any]] = {
    "experiment": {"n_points": 32, "latent_dim": 32, "blocks": 3, "base_channels": 8},
}


@dataclass(frozen=True)
class CliConfig:
    """
    Fully resolved settings of one command: defaults, then the config file,
    then explicit command line flags.
    """

    command: str
    values: Dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    def get(self, key: str, default: Any = None) -> Any:
        """Value of a key, or `default` when unset."""
        value = self.values.get(key)
        return default if value is None else value

    def require(self, *keys: str) -> None:
        """
        Raises
        ------
        ConfigError
            If one of the keys has no value.
        """
        missing = [k for k in keys if self.values.get(k) is None]
        if missing:
            flags = ", ".join("--" + k.replace("_", "-") for k in missing)
            raise ConfigError(f"Command {self.command} requires {flags}")

    def output(self, *parts: str) -> str:
        """Path inside the output directory."""
        return os.path.join(self.values["out"], *parts)

    def to_dict(self) -> Dict[str, Any]:
        """run.json contents (without the version)."""
        return {"command": self.command, **{k: v for (k, v) in self.values.items() if v is not None}}


class Launcher:
    # pylint: disable=too-few-public-methods
    """
    Command line launcher for the edmshape pipeline stages.
    """

    def __init__(self, description: str, long_text: str = "", argv: Optional[List[str]] = None):
        _LOG.info("Launch: %s", description)
        epilog = """
            Every flag can also be given as a key (underscores instead of dashes) of the
            JSON5 --config file; explicit flags override file values. Each stage writes
            run.json into its --out directory; pass it back as --config to repeat the run.
            """
        common = self._common_parser()
        parser = argparse.ArgumentParser(description=f"{description} : {long_text}", epilog=epilog,
                                         parents=[common], argument_default=argparse.SUPPRESS)
        args = self._parse_args(parser, common, argv)
        cli_values = {k: v for (k, v) in vars(args).items() if v is not None}

        config_file = cli_values.pop("config", None)
        config = load_config(config_file, ConfigSchema.CLI) if config_file else {}
        recorded_version = config.pop("version", None)
        if recorded_version is not None and recorded_version != toolkit_version():
            _LOG.warning("Config %s was written by version %s, running %s",
                         config_file, recorded_version, toolkit_version())

        log_level = cli_values.get("log_level") or config.get("log_level", _LOG_LEVEL)
        try:
            log_level = int(log_level)
        except ValueError:
            # failed to parse as an int - leave it as a string and let logging
            # module handle whether it's an appropriate log name or not
            log_level = logging.getLevelName(log_level)
        logging.root.setLevel(log_level)
        log_file = cli_values.get("log_file") or config.get("log_file")
        if log_file:
            log_handler = logging.FileHandler(log_file)
            log_handler.setLevel(log_level)
            log_handler.setFormatter(logging.Formatter(_LOG_FORMAT))
            logging.root.addHandler(log_handler)

        command = cli_values.pop("command", None) or config.get("command")
        if not command:
            parser.error("A command is required, either on the command line or in the --config file.")
        self.config = self._resolve(command, config, cli_values)

    @staticmethod
    def _common_parser() -> argparse.ArgumentParser:
        """
        Options accepted before and after the command name.
        """
        common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
        common.add_argument(
            '--config', required=False,
            help='Main JSON5 configuration file. Its keys are the same as the' +
                 ' command line options and can be overridden by the latter.')
        common.add_argument(
            '--log_file', '--log-file', required=False,
            help='Path to the log file. Use stdout if omitted.')
        common.add_argument(
            '--log_level', '--log-level', required=False, type=str,
            help=f'Logging level. Default is {logging.getLevelName(_LOG_LEVEL)}.' +
                 ' Set to DEBUG for debug, WARNING for warnings only.')
        for name in _COMMON:
            _OPTIONS[name].add_to(common)
        return common

    @staticmethod
    def _parse_args(parser: argparse.ArgumentParser, common: argparse.ArgumentParser,
                    argv: Optional[List[str]]) -> argparse.Namespace:
        """
        Parse the command line arguments.

        Options use `argparse.SUPPRESS` defaults, so the namespace only holds the
        flags given explicitly; defaults are applied when merging with --config.
        """
        subparsers = parser.add_subparsers(dest="command", metavar="command")
        for (command, options) in COMMAND_OPTIONS.items():
            sub = subparsers.add_parser(command, help=_COMMAND_HELP[command], description=_COMMAND_HELP[command],
                                        parents=[common], argument_default=argparse.SUPPRESS)
            if command in _POSITIONALS:
                (dest, allowed) = _POSITIONALS[command]
                # No argparse choices: the value may also come from --config, and the
                # schema enum reports bad values.
                sub.add_argument(dest, nargs="?", metavar="{" + ",".join(allowed) + "}")
            for name in options:
                _OPTIONS[name].add_to(sub)

        # By default we use the command line arguments, but allow the caller to
        # provide some explicitly for testing purposes.
        if argv is None:
            argv = sys.argv[1:].copy()
        return parser.parse_args(argv)

    @staticmethod
    def _resolve(command: str, config: Dict[str, Any], cli_values: Dict[str, Any]) -> CliConfig:
        """
        Merge defaults, config file values and command line flags, then validate.
        """
        if command not in COMMAND_OPTIONS:
            raise ConfigError(f"Unknown command {command!r}; expected one of {sorted(COMMAND_OPTIONS)}")
        keys = _COMMAND_KEYS[command]
        ignored = sorted(set(config) - set(keys) - set(_LOGGING_KEYS) - {"command"})
        if ignored:
            _LOG.warning("Config keys not used by %s: %s", command, ignored)
        values: Dict[str, Any] = {key: _OPTIONS[key].default for key in keys if key in _OPTIONS}
        values.update(_COMMAND_DEFAULTS.get(command, {}))
        values.update({k: v for (k, v) in config.items() if k in keys})
        values.update({k: v for (k, v) in cli_values.items() if k in keys})
        resolved = CliConfig(command, values)
        validate_config(resolved.to_dict(), ConfigSchema.CLI, f"{command} arguments")
        _LOG.debug("Resolved config: %s", resolved.to_dict())
        return resolved

    def write_run_record(self) -> str:
        """
        Write run.json into the output directory and return its path.
        """
        record = {"$schema": _RUN_RECORD_SCHEMA, **self.config.to_dict(), "version": toolkit_version()}
        validate_config(record, ConfigSchema.RUN_RECORD, RUN_RECORD)
        path = self.config.output(RUN_RECORD)
        write_json(record, path)
        return path

    def run(self) -> Dict[str, Any]:
        """
        Run the configured command and return its summary.
        """
        # Imported here: commands imports CliConfig from this module.
        from edmshape_bench.commands import COMMANDS    # pylint: disable=import-outside-toplevel
        os.makedirs(self.config["out"], exist_ok=True)
        self.write_run_record()
        summary = COMMANDS[self.config.command](self.config)
        _LOG.info("%s finished: %s", self.config.command, summary)
        return summary
