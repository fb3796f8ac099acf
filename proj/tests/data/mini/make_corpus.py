#!/usr/bin/env python3
"""Regenerates the mini-corpus inputs.

  make_corpus.py articles                 -> articles.jsonl
  make_corpus.py annotations DATASET.json -> annotations.jsonl

Annotation phrases are located in every passage of the identifier; each hit
becomes one annotation record with code point offsets.
"""
import json
import os
import sys

HERE = os.path.dirname(os.path.abspath(__file__))

ARTICLES = [
    ("Modigliani–Miller theorem", "modigliani_miller.wiki", ["T_c", "r_E", "r_D"]),
    ("Darcy's law", "darcys_law.wiki", ["\\rho", "k", "\\mu"]),
    ("Kermack–McKendrick model", "kermack_mckendrick.wiki", ["\\beta", "I", "N"]),
    ("Binomial theorem", "binomial_theorem.wiki", ["k", "n"]),
    ("Table of ideal gas equations", "ideal_gas_table.wiki", ["p"]),
]

# (article, identifier) -> [(raw_span, explicit, wikilink, deduced_answer)]
ANSWERS = {
    ("Modigliani–Miller theorem", "T_c"): [
        ("the tax rate", True, False, "the tax rate"),
        ("corporate tax rate", True, False, "corporate tax rate"),
    ],
    ("Modigliani–Miller theorem", "r_E"): [
        ("the required rate of return on equity", True, False,
         "the required rate of return on equity"),
        ("cost of levered equity", True, False, "cost of levered equity"),
    ],
    ("Modigliani–Miller theorem", "r_D"): [
        ("the required rate of return on borrowings", True, False,
         "the required rate of return on borrowings"),
        ("[[cost of debt]]", True, True, "cost of debt"),
    ],
    ("Darcy's law", "ρ"): [
        ("the density of the fluid", True, False, "the density of the fluid"),
    ],
    ("Darcy's law", "k"): [
        ("the intrinsic permeability of the medium", True, False,
         "the intrinsic permeability of the medium"),
        ("permeability", True, False, "permeability"),
    ],
    ("Darcy's law", "μ"): [
        ("the dynamic viscosity", True, False, "the dynamic viscosity"),
        ("[[viscosity]]", True, True, "viscosity"),
    ],
    ("Kermack–McKendrick model", "β"): [
        ("parameters of the model", False, False, "a parameter of the model"),
        ("the transmission rate", True, False, "the transmission rate"),
    ],
    ("Kermack–McKendrick model", "I"): [
        ("parameters of the model", False, False, "a parameter of the model"),
    ],
    ("Binomial theorem", "k"): [
        ("k factors", False, False, "the number of factors"),
    ],
    ("Binomial theorem", "n"): [
        # Example value only; dropped when attached.
        ("4", True, False, "4"),
    ],
    ("Table of ideal gas equations", "p"): [
        ("Pressure", False, False, "pressure"),
    ],
}

NEAR = 120


def write_articles():
    with open(os.path.join(HERE, "articles.jsonl"), "w", encoding="utf-8") as out:
        for title, fname, ids in ARTICLES:
            with open(os.path.join(HERE, "articles", fname), encoding="utf-8") as f:
                text = f.read()
            rec = {"title": title, "revision_tag": "mini-1", "wikitext": text, "identifiers": ids}
            out.write(json.dumps(rec, ensure_ascii=False) + "\n")


def find_all(hay, needle):
    i = hay.find(needle)
    while i >= 0:
        yield i
        i = hay.find(needle, i + 1)


def write_annotations(dataset_path):
    with open(dataset_path, encoding="utf-8") as f:
        ds = json.load(f)
    out = open(os.path.join(HERE, "annotations.jsonl"), "w", encoding="utf-8")
    for art in ds["articles"]:
        for ident in art["identifiers"]:
            spec = ANSWERS.get((art["title"], ident["identifier"]), [])
            for ex in ident["examples"]:
                passage = ex["passage"]
                for raw, explicit, wikilink, deduced in spec:
                    for pos in find_all(passage, raw):
                        if raw == "4" and not passage[pos - 4:pos].endswith("= "):
                            continue
                        near = abs(pos - ex["id_passage_offset"]) <= NEAR
                        rec = {
                            "article": art["title"],
                            "identifier": ident["identifier"],
                            "occurrence": ex["occurrence"],
                            "wikilink": wikilink,
                            "explicit": explicit,
                            "raw_span": raw,
                            "deduced_answer": deduced,
                            "start_pos": pos,
                            "end_pos": pos + len(raw),
                            "references_this_id_occurrence": near,
                        }
                        out.write(json.dumps(rec, ensure_ascii=False) + "\n")
    out.close()


if __name__ == "__main__":
    if sys.argv[1:2] == ["articles"]:
        write_articles()
    elif sys.argv[1:2] == ["annotations"] and len(sys.argv) == 3:
        write_annotations(sys.argv[2])
    else:
        sys.exit(__doc__)
