#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.


class SketchException(Exception):
    def __init__(self, text, data=None):
        super(SketchException, self).__init__(text)
        self.text = str(text)
        self.data = data

    def __str__(self):
        return self.text


class SketchConfigError(SketchException):
    """ Invalid sketch geometry or seed """


class SketchDomainError(SketchException):
    """ Index outside [0, domain_size) or vector length mismatch """


class SketchInputError(SketchException):
    """ Non-finite value, scale factor or out of range fraction """


class IncompatibleSketchError(SketchException):
    """ Sketches with different geometry, seed or kind cannot be combined """


class SketchDeserializationError(SketchException):
    def __init__(self, text, offset: int):
        super(SketchDeserializationError, self).__init__(f"{text} (offset {offset})", data=offset)
        self.offset = offset
