# Copyright The puflab Authors.
# Licensed under the Apache License, Version 2.0, see LICENSE for details.
# SPDX-License-Identifier: Apache-2.0

import numpy as np
import pytest

import puflab


def make_device(seed, kind=puflab.PufKind.Photonic):
    return puflab.PufInstance.create(puflab.PufConfig(kind=kind, seed=seed))


def test_noiseless_evaluation_is_deterministic():
    a, b = make_device(7), make_device(7)
    challenge = puflab.RandomStream(1).bits(64)
    assert a.evaluate_noiseless(challenge) == b.evaluate_noiseless(challenge)
    assert a.state_digest() == b.state_digest()
    assert len(a.evaluate_noiseless(challenge)) == 128


def test_wrong_challenge_width_raises():
    with pytest.raises(ValueError):
        make_device(1).evaluate_noiseless([0] * 10)


def test_config_round_trip():
    cfg = puflab.PufConfig(kind=puflab.PufKind.ArbiterLinear, seed=9, response_bits=32)
    back = puflab.PufConfig.from_text(cfg.to_text())
    assert back.seed_hex == cfg.seed_hex
    assert back.response_bits == 32


def test_metrics_on_known_matrix():
    golden = np.array([[0, 0, 1, 1], [0, 1, 0, 1]], dtype=np.uint8)
    m = puflab.compute_metrics(golden, 4, [golden])
    assert float(m["uniformity"]) == pytest.approx(0.5)
    assert float(m["uniqueness"]) == pytest.approx(0.5)
    assert float(m["reliability"]) == pytest.approx(1.0)


def test_fuzzy_extractor_corrects_two_flips_per_block():
    response = puflab.RandomStream(5).bits(640)
    fp, helper = puflab.fe_generate(response, 11)
    noisy = list(response)
    for block in range(128):
        noisy[5 * block] ^= 1
        noisy[5 * block + 3] ^= 1
    assert puflab.fe_reproduce(noisy, helper) == fp


def test_walk_is_a_permutation():
    walk = puflab.derive_walk(b"\x01" * 16, 42, 50)
    assert sorted(walk) == list(range(50))


def test_attestation_detects_memory_change():
    device = make_device(2)
    challenge = puflab.RandomStream(3).bits(64)
    memory = bytes(range(256)) * 16
    h1, t1 = puflab.attest(device, memory, 5, challenge, 1024)
    h2, t2 = puflab.attest(device, memory[:-1] + b"\x00", 5, challenge, 1024)
    assert h1 != h2
    assert t1 == t2 > 0


def test_auth_scenario_under_replay():
    report = puflab.run_scenario("protocol = auth\nadversary = replay\ntrials = 10\nseed = 4\n")
    assert report["adversary_successes"] == "0"
    assert report["accepts"] == "10"


def test_cli_version():
    code, out, _ = puflab.cli(["--version"])
    assert code == 0 and out.strip() == "0.1.0"
