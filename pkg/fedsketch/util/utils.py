#!/usr/bin/env python3
# MIT License
#
# Copyright (c) 2026 fedsketch developers
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software; see the LICENSE file at the repository root for the full text.
import os
import tempfile

MASK64 = (1 << 64) - 1


class Utils:
    @staticmethod
    def mix64(*, value: int) -> int:
        """
        64-bit multiply-xorshift finalizer
        @param value integer, reduced modulo 2^64
        @return mixed 64-bit integer
        """
        z = (value + 0x9E3779B97F4A7C15) & MASK64
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    @staticmethod
    def derive_seed(seed: int, *tags: int) -> int:
        """
        Derive an independent 64-bit seed from a base seed and a sequence of integer tags,
        e.g. derive_seed(rng_seed, round) or derive_seed(rng_seed, round, device_id)
        @param seed base seed
        @param tags integer tags folded in order
        @return derived seed
        """
        z = Utils.mix64(value=seed & MASK64)
        for tag in tags:
            z = Utils.mix64(value=z ^ (int(tag) & MASK64))
        return z

    @staticmethod
    def extract_error_message(*, exception) -> str:
        text = getattr(exception, "text", None)
        if text:
            return str(text)
        if isinstance(exception, dict) and "error" in exception:
            return str(exception.get("error"))
        return str(exception)

    @staticmethod
    def atomic_write(*, path: str, data: str):
        """
        Write text to path atomically: the content lands in a temp file in the same
        directory which is then renamed over the target
        @param path destination file
        @param data text content
        """
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        fd, tmp_path = tempfile.mkstemp(prefix=".tmp-", dir=directory)
        try:
            with os.fdopen(fd, "w", newline="") as stream:
                stream.write(data)
            os.replace(tmp_path, path)
        except Exception:
            if os.path.exists(tmp_path):
                os.remove(tmp_path)
            raise
