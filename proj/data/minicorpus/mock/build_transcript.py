#!/usr/bin/env python3
"""Regenerates transcript.jsonl, the scripted responses for the mini corpus.

Rows are matched in file order by contract name ("task") and substrings of
the prompt; the first match wins.
"""
import json
import pathlib


def ent(kind, name, description=""):
    return {"kind": kind, "name": name, "description": description}


ISN = ent("mechanism", "initial sequence number", "32 bit starting sequence number of a connection")
CLOCK = ent("mechanism", "isn clock", "timer incremented every 4 microseconds")
KEY = ent("mechanism", "secret key", "secret input of the ISN hash")
RESEED = ent("action", "key reseed", "replacement of the secret key while running")
PRF = ent("mechanism", "pseudorandom function", "keyed hash over the connection identifier")
HANDSHAKE = ent("mechanism", "three-way handshake", "SYN, SYN-ACK, ACK exchange")
SYN = ent("event", "syn segment", "segment with the SYN bit set")
RST = ent("event", "reset segment", "segment with the RST bit set")
WINDOW = ent("mechanism", "receive window", "range of acceptable sequence numbers")
CHALLENGE = ent("action", "challenge ack", "ACK sent in reply to a suspicious segment")
ABORT = ent("action", "connection abort", "teardown of the connection")

rows = []


def rule(task, contains, response, excludes=None, responses=None):
    row = {"task": task, "contains": contains}
    if excludes:
        row["excludes"] = excludes
    if responses is not None:
        row["responses"] = responses
    else:
        row["response"] = response
    rows.append(row)


# Entity extraction: code chunks by content, text chunks by origin.
rule("entities", ["siphash_4u32(saddr", "net_secret_rekey"], [ISN, CLOCK, KEY, RESEED, PRF])
rule("entities", ["siphash_4u32(saddr"], [ISN, CLOCK, KEY, PRF])
rule("entities", ["tcp_send_challenge_ack(tp)"], [CHALLENGE, RST, WINDOW, SYN, ABORT])
rule("entities", ["tcp_connect_init(tp)"], [HANDSHAKE, SYN, ISN])
text_entities = {
    "rfc793#3.3": [ISN, CLOCK],
    "rfc793#3.4": [HANDSHAKE, SYN, ISN],
    "rfc793#3.5": [RST, WINDOW, ABORT],
    "rfc1948#1": [ISN],
    "rfc1948#2": [ISN, KEY, CLOCK],
    "rfc5961#3": [RST, CHALLENGE, WINDOW],
    "rfc5961#4": [SYN, CHALLENGE],
    "rfc6528#3": [ISN, KEY, PRF, CLOCK],
    "rfc6528#4": [KEY, RESEED],
}
for origin, ents in text_entities.items():
    rule("entities", ["Source: " + origin + "\n"], ents)
rule("entities", [], [])

# Functional entries per section.
entries = {
    "RFC 793 section 3.3:": [{
        "title": "ISN generator",
        "summary": "Select a new 32 bit initial sequence number for every connection from a clock "
                   "incremented every 4 microseconds.",
        "concepts": ["initial sequence number", "isn clock"]}],
    "RFC 793 section 3.4:": [{
        "title": "Three-way handshake",
        "summary": "Establish a connection with SYN, SYN-ACK and ACK segments carrying both initial "
                   "sequence numbers.",
        "concepts": ["three-way handshake", "syn segment"]}],
    "RFC 793 section 3.5:": [{
        "title": "Reset segment acceptance",
        "summary": "Accept a reset whose sequence number lies in the receive window and abort the connection.",
        "concepts": ["reset segment", "receive window", "connection abort"]}],
    "RFC 1948 section 2:": [{
        "title": "ISN generator",
        "summary": "Compute the ISN as the 4 microsecond clock plus a keyed hash of the connection identifier.",
        "concepts": ["initial sequence number", "secret key", "isn clock"]}],
    "RFC 5961 section 3:": [{
        "title": "Reset segment acceptance",
        "summary": "Reset the connection only when the RST sequence number equals RCV.NXT; answer other "
                   "in-window resets with a challenge ACK.",
        "concepts": ["reset segment", "challenge ack", "receive window"]}],
    "RFC 6528 section 3:": [{
        "title": "ISN generator",
        "summary": "Compute the ISN as the 4 microsecond clock plus a pseudorandom function of the "
                   "connection identifier and a secret key.",
        "concepts": ["initial sequence number", "secret key", "pseudorandom function"]}],
    "RFC 6528 section 4:": [{
        "title": "Secret key reseed",
        "summary": "Reseed the ISN secret key periodically while the system runs, not only at boot.",
        "concepts": ["secret key", "key reseed"]}],
}
for key, value in entries.items():
    rule("functional_entries", [key], value)
# The first reply breaks the contract, which exercises the gateway's retry.
rule("functional_entries", ["RFC 5961 section 4:"], None, responses=[
    "The section defines one rule about SYN handling.",
    [{"title": "SYN segment in synchronized state",
      "summary": "Answer any SYN received in a synchronized state with a challenge ACK instead of resetting.",
      "concepts": ["syn segment", "challenge ack"]}],
])
rule("functional_entries", [], [])

for rfc in (1948, 5961, 6528):
    rule("classify_pair", ["Newer entry:\nRFC %d " % rfc],
         {"classification": "modified", "rationale": "The newer revision changes the required behavior."})
rule("classify_pair", [], {"classification": "inherited", "rationale": "Same behavior."})
rule("classify_removed", [], {"classification": "inherited", "rationale": "The revision does not remove it."})

# Intermediate representations for verification.
rule("", ["Functionality to implement:", "[RFC 6528 section 4]"],
     "Keep a random secret key for the ISN hash and record when it was generated. Before computing an ISN, "
     "regenerate the key when it is older than a fixed lifetime. Compute the ISN as the 4 microsecond clock "
     "plus a keyed pseudorandom function of the addresses and ports.")
rule("", ["Functionality to implement:", "[RFC 1948 section 2]"],
     "Hash the local and remote addresses and ports together with a secret key and add the result to the "
     "4 microsecond clock to form the ISN.")
rule("", ["Functionality to implement:", "[RFC 5961 section"],
     "When a reset arrives, reset the connection only if its sequence number equals RCV.NXT. If it is "
     "inside the window but not exact, send a challenge ACK. Send a challenge ACK for any SYN on a "
     "synchronized connection.")
rule("", ["Functionality to implement:", "[RFC 793 section"],
     "Choose the ISN from a clock, send a SYN to open the connection, and abort on an acceptable reset.")

# Verdicts.
B_6528 = ["RFC 6528 relative to RFC 1948"]
rule("verdict", B_6528 + ["Trial 3 of 5"],
     {"verdict": "unknown",
      "rationale": "The key is created lazily; the candidates do not show whether it is ever replaced.",
      "cited_functions": []},
     excludes=["net_secret_rekey"])
rule("verdict", B_6528,
     {"verdict": "not-implemented",
      "rationale": "secure_tcp_seq initializes net_secret once and never reseeds it while the system runs.",
      "cited_functions": ["net/core/secure_seq.c::secure_tcp_seq", "net/core/secure_seq.c::net_secret_init"]},
     excludes=["net_secret_rekey"])
rule("verdict", B_6528,
     {"verdict": "implemented",
      "rationale": "net_secret_rekey regenerates the key after its lifetime and secure_tcp_seq calls it.",
      "cited_functions": ["net/core/secure_seq.c::secure_tcp_seq", "net/core/secure_seq.c::net_secret_rekey"]})
rule("verdict", ["RFC 1948 relative to RFC 793"],
     {"verdict": "implemented",
      "rationale": "secure_tcp_seq hashes the connection identifier with a secret and adds the clock.",
      "cited_functions": ["net/core/secure_seq.c::secure_tcp_seq", "net/core/secure_seq.c::seq_scale"]})
rule("verdict", ["RFC 5961 relative to RFC 793"],
     {"verdict": "implemented",
      "rationale": "tcp_validate_incoming resets only on an exact RCV.NXT match and challenges other RSTs and SYNs.",
      "cited_functions": ["net/ipv4/tcp_input.c::tcp_validate_incoming",
                          "net/ipv4/tcp_input.c::tcp_send_challenge_ack"]})
rule("verdict", ["RFC 793 (whole document)"],
     {"verdict": "implemented",
      "rationale": "tcp_connect performs the handshake and tcp_validate_incoming handles resets.",
      "cited_functions": ["net/ipv4/tcp_output.c::tcp_connect", "net/ipv4/tcp_input.c::tcp_validate_incoming"]})

# Triplet synthesis.
synth = {
    "popcount32": "Count the set bits of the word by clearing the lowest set bit until the word is zero.",
    "seq_before": "Subtract the second sequence number from the first and report whether the signed result "
                  "is negative.",
    "in_window(unsigned": "Subtract the window start from the value and accept it when the unsigned "
                          "difference is below the window size.",
}
for key, ir in synth.items():
    rule("", ["Rewrite the task description", key], ir)
rule("", ["The diff shows", "Secret used for connection hashing"],
     "Before hashing, regenerate the secret when it has expired instead of creating it only once.")
rule("", ["The diff shows", "Reset segments anywhere"],
     "Reset only when the sequence number equals RCV.NXT and send a challenge ACK for other in-window resets.")

out = pathlib.Path(__file__).with_name("transcript.jsonl")
with out.open("w") as f:
    for row in rows:
        f.write(json.dumps(row, sort_keys=True) + "\n")
