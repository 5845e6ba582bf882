#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.


class DataException(Exception):
    def __init__(self, text, data=None):
        super(DataException, self).__init__(text)
        self.text = str(text)
        self.data = data

    def __str__(self):
        return self.text


class DataConfigError(DataException):
    """ Infeasible synthetic dataset specification """


class DatasetNotFoundError(DataException):
    """ Directory or manifest missing """


class DataParseError(DataException):
    def __init__(self, text, *, path: str, line: int):
        super(DataParseError, self).__init__(f"{path}:{line}: {text}", data=(path, line))
        self.path = path
        self.line = line
