#!/usr/bin/env python3
"""Reference NLP provider for midr (spaCy).

Speaks the JSON-lines protocol of midr::ExternalBackend on stdin/stdout.
Offsets are code points. The model is taken from MIDR_SPACY_MODEL
(default en_core_web_lg).
"""
import json
import os
import sys

import spacy

MODEL = os.environ.get("MIDR_SPACY_MODEL", "en_core_web_lg")


def main():
    nlp = spacy.load(MODEL)
    dim = int(nlp.vocab.vectors_length) or 300
    for line in sys.stdin:
        req = json.loads(line)
        op = req["op"]
        if op == "info":
            reply = {"name": "spacy:" + MODEL + ":" + nlp.meta.get("version", "?"), "dim": dim}
        elif op == "segment":
            doc = nlp(req["text"])
            reply = {"spans": [[s.start_char, s.end_char] for s in doc.sents]}
        elif op == "analyze":
            doc = nlp(req["text"])
            tokens = []
            for t in doc:
                head = -1 if t.head.i == t.i else t.head.i
                tokens.append({"text": t.text, "pos": t.pos_, "start": t.idx,
                               "end": t.idx + len(t.text), "head": head, "dep": t.dep_})
            chunks = [[c.start, c.end] for c in doc.noun_chunks]
            reply = {"tokens": tokens, "noun_chunks": chunks}
        elif op == "embed":
            doc = nlp.make_doc(req["text"])
            vecs = [t.vector for t in doc]
            if vecs:
                mean = sum(vecs) / len(vecs)
                reply = {"vector": [float(x) for x in mean]}
            else:
                reply = {"vector": [0.0] * dim}
        else:
            reply = {"error": "unknown op " + op}
        sys.stdout.write(json.dumps(reply) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
