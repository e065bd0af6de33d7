"""Acceptance gate: twelve end-to-end properties, one per test, each
printing a single PASS/FAIL line on the terminal.

Tolerances are pinned in the assertions themselves; the whole module runs
offline and finishes in well under five minutes.
"""

import itertools
import json
import random

import pytest

from beaconlab import batch, bls, noise, simnet, slashing
from beaconlab.cli import main as cli_main
from beaconlab.errors import (
    HandshakeRejected,
    IdentityPoint,
    IkmTooShort,
    NonceExhausted,
    NotInSubgroup,
)
from beaconlab.suites import ToySuite

MESSAGES = [b"a", b"b", b"c", b"hello", b"x1", b"x2", b"msg7", b"zz", b"q", b"w"]
ROOT_A = b"\xaa" * 32
ROOT_B = b"\xbb" * 32


@pytest.fixture
def announce(capsys):
    def _announce(number, description, ok):
        with capsys.disabled():
            print(f"{'PASS' if ok else 'FAIL'} criterion {number:2d}: {description}")
        assert ok, f"criterion {number}: {description}"

    return _announce


def test_criterion_01_core_verification_oracle(toy, announce):
    disagreements = 0
    for scalar in range(1, toy.order):
        sk = bls.SecretKey(scalar, toy)
        pk = bls.sk_to_pk(sk)
        for msg in MESSAGES:
            h = toy.hash_to_group2(msg)
            if not bls.core_verify(pk, msg, bls.sign(sk, msg)):
                disagreements += 1
            # Every raw group value as a candidate signature.
            for raw in range(toy.modulus):
                cand = toy.unchecked_g2(raw)
                definitional = toy.subgroup_check(cand) and toy.pair(
                    toy.generator_g1, cand
                ) == toy.pair(pk.point, h)
                if bool(bls.core_verify(pk, msg, bls.BlsSignature(cand))) != definitional:
                    disagreements += 1
    # Aggregates of up to three signers against per-signer verification.
    signers = []
    for i in range(3):
        sk = bls.SecretKey(i + 1, toy)
        msg = b"agg message %d" % i
        signers.append((bls.sk_to_pk(sk), msg, bls.sign(sk, msg)))
    for n in (1, 2, 3):
        for combo in itertools.combinations(signers, n):
            pks = [s[0] for s in combo]
            msgs = [s[1] for s in combo]
            sigs = [s[2] for s in combo]
            honest = bls.aggregate(sigs)
            if bool(bls.aggregate_verify(pks, msgs, honest)) != all(
                bls.core_verify(pk, m, s) for pk, m, s in combo
            ):
                disagreements += 1
            bad = bls.BlsSignature(honest.point + toy.generator_g2)
            per_signer_ok = all(bls.core_verify(pk, m, s) for pk, m, s in combo)
            if bool(bls.aggregate_verify(pks, msgs, bad)) and per_signer_ok:
                disagreements += 1  # the tampered aggregate must not verify
    announce(
        1,
        "core and aggregate verification agree with the pairing definition "
        f"(0 disagreements over the exhaustive toy space, got {disagreements})",
        disagreements == 0,
    )


def test_criterion_02_seven_input_checks(toy, announce):
    passed = 0
    with pytest.raises(IkmTooShort):
        bls.keygen(b"\x01" * 31, suite=toy)
    passed += 1
    with pytest.raises(ValueError):
        bls.SecretKey(0, toy)
    with pytest.raises(ValueError):
        bls.SecretKey(toy.order, toy)
    passed += 1
    with pytest.raises(IdentityPoint):
        bls.key_validate(toy.identity_g1().to_bytes(), suite=toy)
    passed += 1
    with pytest.raises(NotInSubgroup):
        bls.key_validate(b"7", suite=toy)
    sk = bls.SecretKey(2, toy)
    pk = bls.sk_to_pk(sk)
    r = bls.core_verify(pk, b"m", bls.BlsSignature(toy.unchecked_g2(7)))
    assert not r and r.reason == "signature-subgroup"
    passed += 1
    sig = bls.sign(sk, b"m")
    r = bls.aggregate_verify([pk, pk], [b"m", b"m"], bls.aggregate([sig, sig]))
    assert not r and r.reason == "duplicate-messages"
    passed += 1
    bogus_pop = bls.ProofOfPossession(sig.point)
    r = bls.fast_aggregate_verify([pk], [bogus_pop], b"m", sig)
    assert not r and r.reason == "pop-failure"
    passed += 1
    assert all(
        toy.hash_to_group2(m) == toy.hash_to_group2(m) for m in MESSAGES
    )
    assert any(
        toy.hash_to_group2(m) != toy.hash_to_group2(m, toy.pop_dst) for m in MESSAGES
    )
    passed += 1
    announce(2, f"all seven signature input checks fire ({passed}/7)", passed == 7)


def test_criterion_03_rogue_key_both_suites(toy, production, announce):
    ok = True
    for suite, rho in ((toy, 3), (production, 0xDEADBEEF)):
        sk = bls.keygen(b"\x21" * 32, suite=suite)
        victim = bls.sk_to_pk(sk)
        message = b"shared attestation payload"
        rogue, forged = bls.rogue_key_forge(victim, message, rho)
        unsafe = bls.unsafe_fast_aggregate_verify([victim, rogue], message, forged)
        pops = [bls.pop_prove(sk), bls.ProofOfPossession(forged.point)]
        gated = bls.fast_aggregate_verify([victim, rogue], pops, message, forged)
        ok = ok and bool(unsafe) and not bool(gated)
    announce(
        3,
        "rogue-key forgery passes unguarded fast aggregation and fails the "
        "possession-proof gate on both suites",
        ok,
    )


def _honest_items(suite, n=2):
    items = []
    for i in range(n):
        sk = bls.keygen(b"acceptance-signer-%d" % i + b"\x00" * 13, suite=suite)
        msg = b"acceptance message %d" % i
        if suite.hash_to_group2(msg).is_identity():
            msg += b"!"
        items.append(batch.BatchItem(bls.sign(sk, msg), [(bls.sk_to_pk(sk), msg)]))
    return items


def test_criterion_04_batch_randomization(big_toy, announce):
    items = _honest_items(big_toy)
    forged = batch.forge_additive_deviation(items, big_toy.generator_g2)
    unit = batch.BatchCoefficients.generate(b"\x01" * 32, 2, order=big_toy.order, bit_width=1)
    fooled = batch.batch_verify(forged, unit) and not batch.naive_verify(forged)
    rejections = 0
    for t in range(1000):
        seed = t.to_bytes(4, "big") + b"\x00" * 28
        coeffs = batch.BatchCoefficients.generate(seed, 2, order=big_toy.order)
        if not batch.batch_verify(forged, coeffs):
            rejections += 1
    big_toy.reset_pairing_count()
    batch.naive_verify(items)
    naive_cost = big_toy.pairing_count
    big_toy.reset_pairing_count()
    batch.batch_verify(items, batch.BatchCoefficients.generate(b"\x02" * 32, 2, order=big_toy.order))
    saved = naive_cost - big_toy.pairing_count
    announce(
        4,
        "additive deviation fools unit coefficients, rejected "
        f"{rejections}/1000 with 128-bit coefficients, {saved} pairing saved (n-1)",
        fooled and rejections == 1000 and saved == len(items) - 1,
    )


def test_criterion_05_subgroup_cancellation_rate(toy257, announce):
    items = _honest_items(toy257)
    forged = batch.forge_subgroup_deviation(items, 5)
    trials = 10_000
    passes_disabled = passes_enabled = 0
    for t in range(trials):
        seed = t.to_bytes(4, "big") + b"\x05" * 28
        coeffs = batch.BatchCoefficients.generate(seed, 2, order=toy257.order)
        if batch.batch_verify(forged, coeffs, enforce_subgroup=False):
            passes_disabled += 1
        if batch.batch_verify(forged, coeffs, enforce_subgroup=True):
            passes_enabled += 1
    rate = passes_disabled / trials
    announce(
        5,
        f"order-5 torsion deviation passes at {rate:.4f} (target [0.188, 0.212]) "
        f"without subgroup checks, {passes_enabled} passes with them",
        0.188 <= rate <= 0.212 and passes_enabled == 0,
    )


def test_criterion_06_slashing_predicates_and_interchange(tmp_path, announce):
    def oracle(a, b):
        if a.target_epoch == b.target_epoch and a.signing_root != b.signing_root:
            return "double-vote"
        if a.source_epoch < b.source_epoch and b.target_epoch < a.target_epoch:
            return "surround"
        if b.source_epoch < a.source_epoch and a.target_epoch < b.target_epoch:
            return "surround"
        return None

    cases = mismatches = 0
    for s1, t1, s2, t2 in itertools.product(range(16), repeat=4):
        cases += 1
        if s1 >= t1 or s2 >= t2:
            try:
                slashing.AttestationRecord(s1, t1, ROOT_A)
                slashing.AttestationRecord(s2, t2, ROOT_A)
                mismatches += 1  # should be unconstructible
            except ValueError:
                pass
            continue
        a = slashing.AttestationRecord(s1, t1, ROOT_A)
        b = slashing.AttestationRecord(s2, t2, ROOT_B)
        kind = slashing.is_slashable_attestation(a, b)
        if (kind.value if kind else None) != oracle(a, b):
            mismatches += 1

    genesis = b"\x11" * 32
    db = slashing.ProtectionDB(tmp_path / "p.jsonl", genesis)
    db.check_and_record(b"\x01" * 48, slashing.AttestationRecord(1, 2, ROOT_A))
    db.check_and_record(b"\x01" * 48, slashing.SignedBlockRecord(3, ROOT_A))
    text1 = slashing.canonical_interchange_json(db.export_interchange())
    db2 = slashing.ProtectionDB(tmp_path / "p2.jsonl", genesis)
    db2.import_interchange(json.loads(text1))
    text2 = slashing.canonical_interchange_json(db2.export_interchange())
    stable = text1 == text2

    suite = ToySuite(subgroup_order=257)
    sk = bls.keygen(b"\x33" * 32, suite=suite)
    pk = bls.sk_to_pk(sk)
    a = slashing.AttestationRecord(1, 2, ROOT_A)
    b = slashing.AttestationRecord(1, 2, ROOT_B)
    sig1 = bls.sign(sk, slashing.attestation_signing_bytes(a)).to_bytes()
    sig2 = bls.sign(sk, slashing.attestation_signing_bytes(b)).to_bytes()
    rng = random.Random(99)
    false_positives = 0
    for _ in range(1000):
        which = rng.choice((1, 2))
        target = slashing.attestation_signing_bytes(a if which == 1 else b)
        while True:  # draw a signature that genuinely fails to verify
            forged = str(rng.randrange(suite.modulus)).encode()
            if not bls.core_verify(pk, target, forged):
                break
        bad1 = forged if which == 1 else sig1
        bad2 = forged if which == 2 else sig2
        if slashing.validate_attester_slashing(a, bad1, b, bad2, pk):
            false_positives += 1
    announce(
        6,
        f"predicate oracle over {cases} epoch tuples ({mismatches} mismatches), "
        f"interchange export/import/export byte-stable ({stable}), "
        f"{false_positives}/1000 bad-signature evidence accepted",
        mismatches == 0 and cases == 65536 and stable and false_positives == 0,
    )


def test_criterion_07_nonce_discipline(announce):
    cap = 255
    cs = noise.CipherState(b"\x03" * 32, nonce_cap=cap)
    for _ in range(cap):
        cs.encrypt_with_ad(b"", b"x")
    exhausted_exactly = False
    try:
        cs.encrypt_with_ad(b"", b"x")
    except NonceExhausted:
        exhausted_exactly = True
    buggy_det = noise.NonceReuseDetector()
    buggy = noise.WrappingCipherState(b"\x05" * 32, counter_bits=8)
    for _ in range(257):
        buggy_det.observe(buggy.k, buggy._nonce_bytes())
        buggy.encrypt_with_ad(b"", b"m")
    real_det = noise.NonceReuseDetector()
    real = noise.CipherState(b"\x06" * 32, nonce_cap=400)
    for _ in range(399):
        real_det.observe(real.k, real._nonce_bytes())
        real.encrypt_with_ad(b"", b"m")
    announce(
        7,
        "nonce cap exhausts at exactly the cap; the wrap detector fires on the "
        "buggy counter and never on the real one",
        exhausted_exactly and buggy_det.fired and not real_det.fired,
    )


def test_criterion_08_static_signature_replay(announce):
    outcomes = []
    for _ in range(2):  # identical seed, identical outcomes
        session = simnet.run_session("noise-xx", 4242, mode="legacy")
        legacy = simnet.replay_inject(session, 2)  # third message carries the identity
        session = simnet.run_session("noise-xx", 4242, mode="hardened")
        hardened = simnet.replay_inject(session, 2)
        outcomes.append((legacy.accepted, hardened.accepted))
    announce(
        8,
        "stolen static-key signature impersonates under the legacy binding and "
        "is rejected under the hardened binding, deterministically",
        outcomes == [(True, False), (True, False)],
    )


def test_criterion_09_amplification(announce):
    configured = simnet.measure_amplification(
        simnet.run_session(
            "noise-xx", 7, mode="bare", responder_padding=96, transport_rounds=0
        ).transcript
    )
    raws = [
        simnet.measure_amplification(
            simnet.run_session("noise-xx", 7, mode="legacy", transport_rounds=0).transcript
        )
        for _ in range(2)
    ]
    announce(
        9,
        f"configured handshake: {configured['initiator_bytes']}-byte request, "
        f"{configured['responder_bytes']}-byte reply, factor {configured['factor']}; "
        f"raw figures stable (factor {raws[0]['factor']})",
        configured == {"initiator_bytes": 32, "responder_bytes": 192, "factor": 6.0}
        and raws[0] == raws[1],
    )


def test_criterion_10_forward_secrecy_probe(announce):
    def initiator_fraction(protocol, *roles):
        session = simnet.run_session(protocol, 77)
        compromise = (
            simnet.CompromiseSet.of(session, *roles) if roles else simnet.CompromiseSet.empty()
        )
        probe = simnet.passive_decrypt_probe(session.transcript, compromise)
        msgs = [
            e
            for e in probe.entries
            if e.label.startswith("transport") and e.direction == "i->r"
        ]
        return sum(e.decrypted for e in msgs) / len(msgs)

    v5 = initiator_fraction("discv5-v5", "responder_static")
    kk = initiator_fraction("discv5-kk", "responder_static")
    empty_ok = True
    for protocol in ("noise-xx", "discv5-v5", "discv5-kk"):
        session = simnet.run_session(protocol, 77)
        probe = simnet.passive_decrypt_probe(session.transcript, simnet.CompromiseSet.empty())
        empty_ok = empty_ok and not any(e.decrypted for e in probe.entries)
    announce(
        10,
        f"responder-static compromise decrypts {v5:.0%} of single-DH transport "
        f"and {kk:.0%} with the ephemeral-mixing variant; empty key set decrypts nothing",
        v5 == 1.0 and kk == 0.0 and empty_ok,
    )


def test_criterion_11_transcript_binding(announce):
    from beaconlab import discv5

    a = discv5.Discv5Config(discv5.NodeIdentity.from_seed(b"bind-a"), b"rng-a", (b"PING",))
    b = discv5.Discv5Config(discv5.NodeIdentity.from_seed(b"bind-b"), b"rng-b", (b"PONG",))
    tamper = lambda p: discv5.inflate_eph_key_size(p, 7)
    unbound = discv5.run_handshake(a, b, variant="v5", tamper_packet=tamper)
    completed = unbound.initiator_keys == unbound.responder_keys
    aborted = False
    try:
        discv5.run_handshake(
            a, b, variant="v5", transcript_binding=True, tamper_packet=tamper
        )
    except HandshakeRejected as exc:
        aborted = exc.reason == "transcript"
    announce(
        11,
        "size-field tampering completes without transcript binding and aborts "
        "with reason 'transcript' when binding is enabled",
        completed and aborted,
    )


CLI_DEMOS = [
    ("bls", "keygen"),
    ("attack", "rogue-key"),
    ("attack", "batch-deviation"),
    ("attack", "batch-subgroup", "--trials", "400"),
    ("attack", "replay-static-sig"),
    ("noise", "handshake"),
    ("discv5", "handshake"),
    ("discv5", "handshake", "--variant", "kk"),
    ("probe", "forward-secrecy"),
    ("measure", "amplification"),
]


def test_criterion_12_cli_determinism(capsys, announce):
    identical = 0
    for demo in CLI_DEMOS:
        argv = ["--json", "--no-timestamp", "--seed", "c0ffee", *demo]
        code1 = cli_main(list(argv))
        out1 = capsys.readouterr().out
        code2 = cli_main(list(argv))
        out2 = capsys.readouterr().out
        if code1 == code2 == 0 and out1 == out2 and out1:
            identical += 1
    announce(
        12,
        f"{identical}/{len(CLI_DEMOS)} CLI demos emit byte-identical JSON "
        "reports on rerun with a fixed seed",
        identical == len(CLI_DEMOS),
    )
