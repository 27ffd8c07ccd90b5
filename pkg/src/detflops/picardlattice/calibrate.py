"""Assembling pushforward matrices from the structural candidate or the oracle."""

from __future__ import annotations

from typing import Sequence

from ..flopengine import FlopMap
from ..tensorcore import Instance
from .lattice import (CalibrationUnavailable, LatticeError, PushforwardMatrix, check_pushforward,
                      from_pullback_column, structural_pushforward)
from .oracle import degree_count_pullback


def pushforward_matrix(fm: FlopMap, mode: str = "structural", primes: Sequence[int] = (3, 5),
                       tower: int = 3, seed: int = 0, check: bool = True) -> PushforwardMatrix:
    """Lattice map of the flop ``X_j -> X_i`` on ``N^1``.

    The image of the exchanged source class ``H_i`` equals the pullback of
    ``H_i`` along the reverse flop, which is what the oracle measures.
    """
    inst, j, i = fm.instance, fm.source, fm.target
    if mode == "structural":
        pf = structural_pushforward(inst.n, inst.N, j, i)
    elif mode == "oracle-calibrated":
        if inst.n != 1:
            raise CalibrationUnavailable(f"no counting oracle for n = {inst.n}; use structural mode")
        res = degree_count_pullback(fm.reverse(), i, primes=primes, tower=tower, seed=seed)
        pf = from_pullback_column(inst.N, j, i, res.as_dict(), "oracle-calibrated", primes=primes)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if check:
        bad = check_pushforward(pf)
        if bad:
            raise LatticeError(f"pushforward {fm.pair} fails: {'; '.join(bad)}")
    return pf


def calibrate_all(instance: Instance, mode: str = "oracle-calibrated", primes: Sequence[int] = (3, 5),
                  tower: int = 3, seed: int = 0, pairs=None, threads: int = 1) -> dict[tuple[int, int], PushforwardMatrix]:
    pairs = pairs or [(j, i) for j in instance.slots for i in instance.slots if j != i]

    jobs = [(instance, pair, mode, tuple(primes), tower, seed) for pair in pairs]
    if threads > 1:
        # the counting is pure Python, so worker processes rather than threads
        from concurrent.futures import ProcessPoolExecutor
        with ProcessPoolExecutor(threads) as ex:
            return dict(ex.map(_one, jobs))
    return dict(_one(job) for job in jobs)


def _one(job):
    instance, pair, mode, primes, tower, seed = job
    return pair, pushforward_matrix(FlopMap(instance, *pair), mode, primes, tower, seed)
