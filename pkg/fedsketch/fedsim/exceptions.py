#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.


class FedSimException(Exception):
    def __init__(self, text, data=None):
        super(FedSimException, self).__init__(text)
        self.text = str(text)
        self.data = data

    def __str__(self):
        return self.text


class FedConfigError(FedSimException):
    """ Invalid protocol configuration; the message names the offending field """


class TrainingDivergedError(FedSimException):
    """ Local training produced non-finite parameters """
