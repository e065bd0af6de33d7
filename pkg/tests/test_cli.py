"""End-to-end runs of the command-line front end via in-process main()."""

import json

import pytest

from beaconlab import bls, slashing
from beaconlab.cli import main
from beaconlab.suites import ToySuite


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_json(capsys, *argv):
    code, out, _ = run(capsys, "--json", "--no-timestamp", *argv)
    return code, json.loads(out)


# ---------------------------------------------------------------------------
# Dispatch and usage errors
# ---------------------------------------------------------------------------


def test_no_arguments_is_usage_error(capsys):
    code, _, err = run(capsys)
    assert code == 2 and "usage" in err


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_group_without_action_is_usage_error(capsys):
    code, _, _ = run(capsys, "bls")
    assert code == 2


def test_bad_seed_is_usage_error(capsys):
    code, _, err = run(capsys, "--seed", "not-hex", "bls", "keygen")
    assert code == 2 and "seed" in err


def test_seed_env_fallback(capsys, monkeypatch):
    monkeypatch.setenv("LAB_SEED", "ab" * 8)
    code, doc = run_json(capsys, "bls", "keygen")
    assert code == 0 and doc["seed"] == "ab" * 8


def test_missing_file_is_usage_error(capsys, tmp_path):
    code, _, err = run(capsys, "bls", "batch-verify", "--file", str(tmp_path / "nope.json"))
    assert code == 2 and "error" in err


# ---------------------------------------------------------------------------
# Report shape and determinism
# ---------------------------------------------------------------------------


def test_report_schema_fields(capsys):
    code, doc = run_json(capsys, "bls", "keygen")
    assert code == 0
    assert doc["schema_version"] == 1
    assert doc["command"] == "bls keygen"
    assert set(doc) >= {"seed", "parameters", "outcome", "metrics", "finding"}
    assert "timestamp" not in doc


def test_timestamp_present_by_default(capsys):
    code, out, _ = run(capsys, "--json", "bls", "keygen")
    assert code == 0 and "timestamp" in json.loads(out)


@pytest.mark.parametrize(
    "argv",
    [
        ("bls", "keygen"),
        ("attack", "rogue-key"),
        ("attack", "batch-deviation"),
        ("attack", "replay-static-sig"),
        ("noise", "handshake"),
        ("discv5", "handshake", "--variant", "kk"),
        ("probe", "forward-secrecy"),
        ("measure", "amplification"),
    ],
)
def test_reports_are_byte_identical_across_reruns(capsys, argv):
    code1, out1, _ = run(capsys, "--json", "--no-timestamp", "--seed", "0badcafe", *argv)
    code2, out2, _ = run(capsys, "--json", "--no-timestamp", "--seed", "0badcafe", *argv)
    assert code1 == code2 == 0
    assert out1 == out2


def test_different_seeds_change_the_report(capsys):
    _, doc1 = run_json(capsys, "--seed", "01", "bls", "keygen")
    _, doc2 = run_json(capsys, "--seed", "02", "bls", "keygen")
    assert doc1["metrics"]["pk"] != doc2["metrics"]["pk"]


# ---------------------------------------------------------------------------
# bls round trip through the CLI
# ---------------------------------------------------------------------------


def test_keygen_sign_verify_round_trip(capsys):
    _, doc = run_json(capsys, "bls", "keygen")
    sk, pk = doc["metrics"]["sk"], doc["metrics"]["pk"]
    msg = b"cli round trip".hex()
    _, doc = run_json(capsys, "bls", "sign", "--sk", sk, "--message", msg)
    sig = doc["metrics"]["signature"]
    code, doc = run_json(
        capsys, "bls", "verify", "--pk", pk, "--message", msg, "--signature", sig
    )
    assert code == 0 and doc["outcome"] == "VALID"
    code, doc = run_json(
        capsys, "bls", "verify", "--pk", pk, "--message", b"other".hex(), "--signature", sig
    )
    assert code == 1 and doc["outcome"].startswith("INVALID")


def test_aggregate_command(capsys):
    _, k = run_json(capsys, "bls", "keygen")
    msg = b"m".hex()
    _, s1 = run_json(capsys, "bls", "sign", "--sk", k["metrics"]["sk"], "--message", msg)
    _, s2 = run_json(
        capsys, "--seed", "02", "bls", "sign", "--sk", k["metrics"]["sk"], "--message", msg
    )
    code, doc = run_json(
        capsys,
        "bls", "aggregate",
        "--signature", s1["metrics"]["signature"],
        "--signature", s2["metrics"]["signature"],
    )
    assert code == 0 and doc["metrics"]["signature"]


def test_batch_verify_file(capsys, tmp_path):
    from beaconlab import batch

    suite = ToySuite()  # the CLI parses the file with the default toy suite
    items = []
    for i in range(3):
        sk = bls.keygen(b"cli-batch-%d" % i + b"\x00" * 21, suite=suite)
        msg = b"batch file message %d" % i
        items.append(batch.BatchItem(bls.sign(sk, msg), [(bls.sk_to_pk(sk), msg)]))
    coeffs = batch.BatchCoefficients.generate(b"\x09" * 32, 3, order=suite.order)
    path = tmp_path / "batch.json"
    path.write_text(json.dumps(batch.batch_to_json(items, coeffs, enforce_subgroup=True)))
    code, doc = run_json(capsys, "bls", "batch-verify", "--file", str(path))
    assert code == 0
    assert doc["metrics"]["accepted"] is True
    assert doc["metrics"]["pairings_saved"] == 2  # n - 1 for n = 3


# ---------------------------------------------------------------------------
# Attack demos: each report shows vulnerable and mitigated modes together
# ---------------------------------------------------------------------------


def test_rogue_key_report(capsys):
    code, doc = run_json(capsys, "attack", "rogue-key")
    assert code == 0
    assert doc["finding"] == "rogue-key-aggregation"
    assert doc["metrics"]["unsafe_fast_verify"] == "VALID"
    assert doc["metrics"]["pop_enforced_verify"].startswith("INVALID")


def test_batch_deviation_report(capsys):
    code, doc = run_json(capsys, "attack", "batch-deviation")
    assert code == 0
    m = doc["metrics"]
    assert m["unit_coefficients_accepted"] and not m["random_coefficients_accepted"]
    assert not m["naive_per_item"]


def test_batch_subgroup_report(capsys):
    code, doc = run_json(capsys, "attack", "batch-subgroup", "--trials", "400")
    assert code == 0
    m = doc["metrics"]
    assert m["passes_with_checks_enabled"] == 0
    assert 0.13 <= m["pass_rate"] <= 0.27


def test_replay_static_sig_report(capsys):
    code, doc = run_json(capsys, "attack", "replay-static-sig")
    assert code == 0
    assert doc["metrics"]["legacy"] == "Impersonated"
    assert doc["metrics"]["hardened"].startswith("Rejected")


# ---------------------------------------------------------------------------
# Handshakes, probe, amplification
# ---------------------------------------------------------------------------


def test_noise_handshake_command(capsys):
    code, doc = run_json(capsys, "noise", "handshake", "--mode", "legacy")
    assert code == 0 and doc["outcome"] == "completed"
    assert doc["metrics"]["message_sizes"][0] == 32


def test_discv5_handshake_command(capsys):
    for variant in ("v5", "kk"):
        code, doc = run_json(capsys, "discv5", "handshake", "--variant", variant)
        assert code == 0
        assert doc["metrics"]["session_keys_equal"] is True


def test_probe_contrast_between_variants(capsys):
    _, v5 = run_json(
        capsys, "probe", "forward-secrecy",
        "--protocol", "discv5-v5", "--compromise", "responder_static",
    )
    _, kk = run_json(
        capsys, "probe", "forward-secrecy",
        "--protocol", "discv5-kk", "--compromise", "responder_static",
    )
    assert v5["metrics"]["transport_decrypted"] == v5["metrics"]["transport_messages"] > 0
    assert kk["metrics"]["transport_decrypted"] == 0
    assert v5["metrics"]["initiator_direction_decrypted_fraction"] == 1.0


def test_amplification_command(capsys):
    code, doc = run_json(capsys, "measure", "amplification", "--protocol", "noise-xx")
    assert code == 0
    assert doc["metrics"]["configured"] == {
        "initiator_bytes": 32,
        "responder_bytes": 192,
        "factor": 6.0,
    }
    assert doc["metrics"]["raw_libp2p"]["factor"] == 6.1875


# ---------------------------------------------------------------------------
# Slashing protection through the CLI
# ---------------------------------------------------------------------------


def test_slash_check_allows_then_denies(capsys, tmp_path):
    db = str(tmp_path / "p.jsonl")
    pub = "11" * 48
    code, doc = run_json(
        capsys, "slash", "check", "--db", db, "--pubkey", pub,
        "--attestation", "1,2," + "aa" * 32,
    )
    assert code == 0 and doc["outcome"] == "Allow"
    code, doc = run_json(
        capsys, "slash", "check", "--db", db, "--pubkey", pub,
        "--attestation", "1,2," + "bb" * 32,
    )
    assert code == 1 and doc["outcome"].startswith("Deny")


def test_slash_export_import_cycle(capsys, tmp_path):
    db = str(tmp_path / "p.jsonl")
    run_json(
        capsys, "slash", "check", "--db", db, "--pubkey", "22" * 48,
        "--block", "5," + "cc" * 32,
    )
    out = tmp_path / "interchange.json"
    code, doc = run_json(capsys, "slash", "export", "--db", db, "--out", str(out))
    assert code == 0 and out.exists()
    db2 = str(tmp_path / "p2.jsonl")
    code, doc = run_json(capsys, "slash", "import", "--db", db2, "--file", str(out))
    assert code == 0 and doc["metrics"] == {"imported": 1, "skipped": 0}


def test_slash_validate_evidence_file(capsys, tmp_path):
    suite = ToySuite()  # the CLI validates with the default toy suite
    sk = bls.keygen(b"evidence-signer" + b"\x00" * 17, suite=suite)
    a = slashing.AttestationRecord(1, 2, b"\xaa" * 32)
    b = slashing.AttestationRecord(1, 2, b"\xbb" * 32)
    doc = {
        "kind": "attester",
        "pubkey": bls.sk_to_pk(sk).to_bytes().hex(),
        "record_1": {"source_epoch": 1, "target_epoch": 2, "signing_root": "aa" * 32},
        "record_2": {"source_epoch": 1, "target_epoch": 2, "signing_root": "bb" * 32},
        "signature_1": bls.sign(sk, slashing.attestation_signing_bytes(a)).to_bytes().hex(),
        "signature_2": bls.sign(sk, slashing.attestation_signing_bytes(b)).to_bytes().hex(),
    }
    path = tmp_path / "evidence.json"
    path.write_text(json.dumps(doc))
    code, out = run_json(capsys, "slash", "validate-evidence", "--file", str(path))
    assert code == 0 and out["outcome"] == "Valid"
    # Corrupt one signature: exit 1 with the failing signature named.
    doc["signature_1"] = b"1".hex()  # outside the signature subgroup
    path.write_text(json.dumps(doc))
    code, out = run_json(capsys, "slash", "validate-evidence", "--file", str(path))
    assert code == 1 and out["metrics"]["reason"] == "bad-signature-1"
