#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.


class PrivacyException(Exception):
    def __init__(self, text, data=None):
        super(PrivacyException, self).__init__(text)
        self.text = str(text)
        self.data = data

    def __str__(self):
        return self.text


class PrivacyInputError(PrivacyException):
    """ Non-positive epsilon, sensitivity, clip norm or dimension """
