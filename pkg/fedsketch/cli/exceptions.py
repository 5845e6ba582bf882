#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import click


class ExperimentConfigError(click.ClickException):
    """ Invalid configuration or arguments; nothing has run """
    exit_code = 1


class ExperimentRuntimeError(click.ClickException):
    """ Failure while generating data, training or writing results """
    exit_code = 2
