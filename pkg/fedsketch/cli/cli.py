#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import json
import logging
import os
from typing import List, Tuple

import click

from .exceptions import ExperimentConfigError, ExperimentRuntimeError
from ..data import generate_synthetic, save_csv, DataConfigError
from ..experiment_manager import ExperimentConfig, ExperimentConfigException, ExperimentManager
from ..util.constants import Constants
from ..util.utils import Utils


def __parse_overrides(args: List[str]) -> List[Tuple[str, str]]:
    """
    Turn trailing '--section.field value' (or '--section.field=value', or a top-level '--data_dir DIR')
    arguments into pairs
    @param args extra command line arguments
    @raises ExperimentConfigError on anything that is not an override
    """
    overrides = []
    i = 0
    while i < len(args):
        arg = args[i]
        if not arg.startswith("--") or len(arg) == 2:
            raise ExperimentConfigError(f"Unexpected argument: {arg}")
        if "=" in arg:
            key, value = arg[2:].split("=", 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise ExperimentConfigError(f"Missing value for override {arg}")
            key, value = arg[2:], args[i + 1]
            i += 2
        overrides.append((key, value))
    return overrides


def __load_config(*, ctx: click.Context, config_path: str, out: str = None, compression: float = None,
                  algorithm: str = None, seed: int = None) -> ExperimentConfig:
    """
    Config file first, then named flags, then dotted overrides
    @raises ExperimentConfigError in case of error
    """
    overrides = []
    if out is not None:
        overrides.append(("output_dir", json.dumps(out)))
    if compression is not None:
        overrides.append(("compression", compression))
    if algorithm is not None:
        overrides.append(("fed.algorithm", algorithm))
    if seed is not None:
        overrides.append(("fed.rng_seed", seed))
    overrides.extend(__parse_overrides(ctx.args))
    try:
        return ExperimentConfig.load(config_path, overrides=overrides)
    except ExperimentConfigException as e:
        raise ExperimentConfigError(str(e))


def __get_experiment_manager(*, config: ExperimentConfig) -> ExperimentManager:
    try:
        return ExperimentManager(config=config)
    except ExperimentConfigException as e:
        raise ExperimentConfigError(str(e))


_OVERRIDES = dict(ignore_unknown_options=True, allow_extra_args=True)


@click.group()
@click.option('-v', '--verbose', is_flag=True)
@click.pass_context
def cli(ctx, verbose):
    ctx.ensure_object(dict)
    ctx.obj['VERBOSE'] = verbose
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO,
                        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s")


@cli.command(context_settings=_OVERRIDES)
@click.option('--config', 'config_path', envvar=Constants.FEDSKETCH_CONFIG, default=None,
              help='Experiment JSON config ($FEDSKETCH_CONFIG)')
@click.option('--out', default=None, help='Output directory ($FEDSKETCH_OUTPUT_DIR)')
@click.option('--compression', type=float, default=None,
              help='Compression ratio; resolves a 5-row sketch, 1 runs the dense baseline')
@click.option('--algorithm', type=click.Choice([Constants.ALGORITHM_VANILLA, Constants.ALGORITHM_SKETCHED]),
              default=None, help='FedAvg variant')
@click.option('--seed', type=int, default=None, help='Protocol seed (fed.rng_seed)')
@click.pass_context
def run(ctx, config_path: str, out: str, compression: float, algorithm: str, seed: int):
    """ Run one experiment; extra '--section.field value' pairs override the config
    """
    config = __load_config(ctx=ctx, config_path=config_path, out=out, compression=compression,
                           algorithm=algorithm, seed=seed)
    manager = __get_experiment_manager(config=config)
    try:
        log = manager.run()
        if log:
            click.echo(f"Final test accuracy: {log[-1].test_accuracy:.4f}, "
                       f"cumulative bytes: {log[-1].cumulative_bytes}")
        click.echo(f"Results saved at: {manager.output_dir}")
    except ExperimentConfigException as e:
        raise ExperimentConfigError(str(e))
    except click.ClickException as e:
        raise e
    except Exception as e:
        logging.debug("Experiment failed", exc_info=True)
        raise ExperimentRuntimeError(Utils.extract_error_message(exception=e))


@cli.command(context_settings=_OVERRIDES)
@click.option('--config', 'config_path', envvar=Constants.FEDSKETCH_CONFIG, default=None,
              help='Experiment JSON config ($FEDSKETCH_CONFIG)')
@click.option('--out', default=None, help='Output directory ($FEDSKETCH_OUTPUT_DIR)')
@click.option('--compression', 'compressions', type=float, multiple=True,
              help='Compression ratio, repeatable; defaults to 1, 10 and 25')
@click.option('--algorithm', type=click.Choice([Constants.ALGORITHM_VANILLA, Constants.ALGORITHM_SKETCHED]),
              default=None, help='FedAvg variant')
@click.option('--seed', type=int, default=None, help='Protocol seed (fed.rng_seed)')
@click.pass_context
def sweep(ctx, config_path: str, out: str, compressions: Tuple[float], algorithm: str, seed: int):
    """ Run the same experiment at several compression ratios and write sweep.csv
    """
    config = __load_config(ctx=ctx, config_path=config_path, out=out, algorithm=algorithm, seed=seed)
    if config.compression is not None:
        raise ExperimentConfigError("Invalid field 'compression': use --compression on the sweep command")
    manager = __get_experiment_manager(config=config)
    try:
        rows = manager.sweep(list(compressions) if compressions else [1, 10, 25])
        for row in rows:
            click.echo(f"ratio {row['ratio']:g}: accuracy {row['final_accuracy']:.4f}, "
                       f"bytes {row['total_bytes']}")
        click.echo(f"Sweep saved at: {os.path.join(manager.output_dir, Constants.SWEEP_FILE)}")
    except ExperimentConfigException as e:
        raise ExperimentConfigError(str(e))
    except click.ClickException as e:
        raise e
    except Exception as e:
        logging.debug("Sweep failed", exc_info=True)
        raise ExperimentRuntimeError(Utils.extract_error_message(exception=e))


@click.group()
@click.pass_context
def data(ctx):
    """ Synthetic dataset management
    """


@data.command(context_settings=_OVERRIDES)
@click.option('--config', 'config_path', envvar=Constants.FEDSKETCH_CONFIG, default=None,
              help='Experiment JSON config; only the data section is used')
@click.option('--out', required=True, help='Dataset directory')
@click.pass_context
def generate(ctx, config_path: str, out: str):
    """ Generate the synthetic federated dataset and save it as CSV shards
    """
    config = __load_config(ctx=ctx, config_path=config_path)
    try:
        dataset = generate_synthetic(config.data.validate())
        save_csv(dataset, out)
        click.echo(f"{dataset.num_devices} shards ({sum(dataset.sample_counts)} training examples) "
                   f"saved at: {out}")
    except DataConfigError as e:
        raise ExperimentConfigError(Utils.extract_error_message(exception=e))
    except Exception as e:
        raise ExperimentRuntimeError(Utils.extract_error_message(exception=e))


cli.add_command(data)
