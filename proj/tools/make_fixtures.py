#!/usr/bin/env python3
"""Regenerates the committed test fixtures and data files.

Expected outputs are computed here, independently of the C++ code:
  * the Table I fixture's expected `ingest` output comes from the target
    counts, not from parsing the CSV with the library;
  * golden-corpus token lists and the Porter reference come from nltk's
    PorterStemmer in ORIGINAL_ALGORITHM mode.

Usage: python3 tools/make_fixtures.py  (from the repository root; needs nltk)
"""

import json
import random
import re
import struct
from pathlib import Path

from nltk.stem.porter import PorterStemmer

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"
TESTDATA = ROOT / "tests" / "data"

# ---------------------------------------------------------------------------
# Emoji lexicon

EMOJI = [
    ("U+1F602", "face with tears of joy"),
    ("U+1F923", "rolling on the floor laughing"),
    ("U+1F600", "grinning face"),
    ("U+1F603", "grinning face with big eyes"),
    ("U+1F604", "grinning face with smiling eyes"),
    ("U+1F601", "beaming face with smiling eyes"),
    ("U+1F605", "grinning face with sweat"),
    ("U+1F606", "grinning squinting face"),
    ("U+1F609", "winking face"),
    ("U+1F60A", "smiling face with smiling eyes"),
    ("U+1F60D", "smiling face with heart eyes"),
    ("U+1F618", "face blowing a kiss"),
    ("U+1F61C", "winking face with tongue"),
    ("U+1F60E", "smiling face with sunglasses"),
    ("U+1F60F", "smirking face"),
    ("U+1F612", "unamused face"),
    ("U+1F614", "pensive face"),
    ("U+1F622", "crying face"),
    ("U+1F62D", "loudly crying face"),
    ("U+1F621", "pouting face"),
    ("U+1F620", "angry face"),
    ("U+1F631", "face screaming in fear"),
    ("U+1F633", "flushed face"),
    ("U+1F644", "face with rolling eyes"),
    ("U+1F914", "thinking face"),
    ("U+1F921", "clown face"),
    ("U+1F92A", "zany face"),
    ("U+1F92F", "exploding head"),
    ("U+1F937", "person shrugging"),
    ("U+1F926", "person facepalming"),
    ("U+1F64F", "folded hands"),
    ("U+1F44D", "thumbs up"),
    ("U+1F44E", "thumbs down"),
    ("U+1F44F", "clapping hands"),
    ("U+1F4AA", "flexed biceps"),
    ("U+1F525", "fire"),
    ("U+1F4AF", "hundred points"),
    ("U+1F480", "skull"),
    ("U+1F4A9", "pile of poo"),
    ("U+1F389", "party popper"),
    ("U+1F381", "wrapped gift"),
    ("U+1F3C6", "trophy"),
    ("U+1F4B0", "money bag"),
    ("U+1F436", "dog face"),
    ("U+1F431", "cat face"),
    ("U+1F438", "frog"),
    ("U+1F355", "pizza"),
    ("U+1F37A", "beer mug"),
    ("U+2615", "hot beverage"),
    ("U+2764 U+FE0F", "red heart"),
    ("U+2764", "red heart"),
    ("U+1F494", "broken heart"),
    ("U+1F499", "blue heart"),
    ("U+2728", "sparkles"),
    ("U+2B50", "star"),
    ("U+1F31F", "glowing star"),
    ("U+2600 U+FE0F", "sun"),
    ("U+26A1", "high voltage"),
    ("U+2705", "check mark button"),
    ("U+274C", "cross mark"),
    ("U+26A0 U+FE0F", "warning"),
    ("U+1F440", "eyes"),
    ("U+1F648", "see no evil monkey"),
    ("U+1F680", "rocket"),
    ("U+1F4F1", "mobile phone"),
    ("U+1F4BB", "laptop"),
    ("U+1F3B5", "musical note"),
    ("U+1F1EE U+1F1F3", "flag india"),
    ("U+1F1FA U+1F1F8", "flag united states"),
    ("U+1F44D U+1F3FD", "thumbs up medium skin tone"),
    ("U+1F937 U+200D U+2642 U+FE0F", "man shrugging"),
    ("U+1F937 U+200D U+2640 U+FE0F", "woman shrugging"),
]


def cp_seq(spec):
    return "".join(chr(int(p[2:], 16)) for p in spec.split())


def write_lexicon():
    lines = ["# emoji (code points)\tname words", "# Longest sequence wins; unlisted emoji are dropped."]
    lines += [f"{seq}\t{name}" for seq, name in EMOJI]
    (DATA / "emoji_lexicon.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return {cp_seq(seq): name for seq, name in EMOJI}


# ---------------------------------------------------------------------------
# Reference text pipeline (oracle)

STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)
ASCII_WS = re.compile(r"[ \t\n\r\f\v]+")


def is_emoji(cp):
    return (
        0x1F000 <= cp <= 0x1FAFF
        or 0x2600 <= cp <= 0x27BF
        or 0x2300 <= cp <= 0x23FF
        or 0x2B00 <= cp <= 0x2BFF
        or 0xFE00 <= cp <= 0xFE0F
        or 0xE0020 <= cp <= 0xE007F
        or cp in (0x200D, 0x20E3, 0xA9, 0xAE, 0x203C, 0x2049, 0x2122, 0x2139, 0x3030, 0x303D, 0x3297, 0x3299)
    )


def fixpoint(word):
    while True:
        s = STEMMER.stem(word, to_lowercase=False)
        if s == word:
            return s
        word = s


def oracle_tokens(raw, lexicon, vocab):
    text = "".join(chr(ord(c) + 32) if "A" <= c <= "Z" else c for c in raw)
    longest = max(len(k) for k in lexicon)
    out, i = [], 0
    while i < len(text):
        for n in range(min(longest, len(text) - i), 0, -1):
            if text[i : i + n] in lexicon:
                out.append(" " + lexicon[text[i : i + n]] + " ")
                i += n
                break
        else:
            out.append(" " if is_emoji(ord(text[i])) else text[i])
            i += 1
    words = [w for w in ASCII_WS.split("".join(out)) if w]
    kept = []
    for w in words:
        if w.startswith("@"):
            continue
        w = w.lstrip("#")
        if w:
            kept.append(w)
    allowed = set(vocab) | {fixpoint(w) for w in vocab if re.fullmatch("[a-z]+", w)}
    tokens = [fixpoint(t) for t in re.findall("[a-z]+", " ".join(kept))]
    return [t for t in tokens if t in allowed]


GOLDEN_VOCAB = """wow win winning ok face with tears of joy hello world funny meme memes
run running runs runner cat cats happy happiness generously generous relational
agreed agree dog dogs fire hundred points red heart thumbs up monday coffee
sarcasm sarcastic motivation motivational inspire inspiring great day when you
the a is it this my me laugh laughing crying loudly skull party popper
nice mood friday weekend work working worked boss exam exams study studying
conditional rational""".split()

GOLDEN_TEXTS = [
    "WOW \U0001F602 @bob #winning",
    "",
    "HELLO",
    "ok \U0001F602",
    "\U0001F602\U0001F602",
    "@user nice #meme",
    "#A#B",
    "Running runners RUN runs",
    "cats and dogs living together",
    "Happiness is a warm cat",
    "generously relational conditional agreed",
    "When you see the exam \U0001F480\U0001F480 #StudyStudying",
    "Monday mood: ☕ ❤️ coffee",
    "fire \U0001F525 \U0001F4AF points",
    "\U0001F44D\U0001F3FD thumbs up from @boss_man at work",
    "Loudly crying \U0001F62D over my exams!!!",
    "party \U0001F389\U0001F389 friday weekend #TGIF",
    "sarcasm?? never... #sarcastic @someone",
    "inspire✨ great day⭐ motivational\U0001F4AA",
    "unknown emoji \U0001F9FF and café naïve words",
]


def write_golden(lexicon):
    vocab = sorted(set(GOLDEN_VOCAB))
    (TESTDATA / "golden_vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    lines = []
    for i, text in enumerate(GOLDEN_TEXTS):
        rec = {"id": f"g{i:02d}", "text": text, "tokens": oracle_tokens(text, lexicon, vocab)}
        lines.append(json.dumps(rec, ensure_ascii=False))
    (TESTDATA / "golden_corpus.jsonl").write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_porter_reference():
    words = (DATA / "english_words.txt").read_text().split()
    rng = random.Random(20240607)
    sample = sorted(set(rng.sample(words, 3000)))
    extra = ["caresses", "ponies", "ties", "caress", "cats", "feed", "agreed", "plastered", "bled", "motoring",
             "sing", "conflated", "troubled", "sized", "hopping", "tanned", "falling", "hissing", "fizzed",
             "failing", "filing", "happy", "sky", "relational", "conditional", "rational", "valenci",
             "hesitanci", "digitizer", "conformabli", "radicalli", "differentli", "vileli", "analogousli",
             "vietnamization", "predication", "operator", "feudalism", "decisiveness", "hopefulness",
             "callousness", "formaliti", "sensitiviti", "sensibiliti", "triplicate", "formative",
             "formalize", "electriciti", "electrical", "hopeful", "goodness", "revival", "allowance",
             "inference", "airliner", "gyroscopic", "adjustable", "defensible", "irritant", "replacement",
             "adjustment", "dependent", "adoption", "homologou", "communism", "activate", "angulariti",
             "homologous", "effective", "bowdlerize", "probate", "rate", "cease", "controll", "roll",
             "generously", "running", "funny", "memes", "a", "is", "as", "sky", "news", "dying", "lying"]
    pairs = {w: STEMMER.stem(w, to_lowercase=False) for w in sample + extra if re.fullmatch("[a-z]+", w)}
    lines = [f"{w}\t{s}" for w, s in sorted(pairs.items())]
    (TESTDATA / "porter_reference.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Table I fixture

TABLE1 = {
    # task: (column, [(raw label, count, summary column)])
    "humor": ("humour", [("funny", 4160, "positive"), ("not_funny", 631, "negative"), ("somewhat_funny", 2201, "neutral")]),
    "sarcasm": ("sarcasm", [("general", 3100, "positive"), ("twisted_meaning", 2241, "positive"),
                            ("not_sarcastic", 1651, "negative")]),
    "motivation": ("motivational", [("motivational", 2467, "positive"), ("not_motivational", 4525, "negative")]),
    "sentiment": ("overall_sentiment", [("positive", 1600, "positive"), ("very_positive", 341, "positive"),
                                        ("negative", 4000, "negative"), ("very_negative", 1051, "negative")]),
}
CLASS_OF = {
    "funny": "funny", "somewhat_funny": "funny", "not_funny": "not_funny",
    "general": "sarcastic", "twisted_meaning": "sarcastic", "not_sarcastic": "not_sarcastic",
    "motivational": "motivational", "not_motivational": "not_motivational",
    "positive": "positive", "very_positive": "positive", "negative": "negative", "very_negative": "negative",
    "neutral": "neutral",
}
CLASS_ORDER = {
    "humor": ["funny", "not_funny"],
    "sarcasm": ["sarcastic", "not_sarcastic"],
    "motivation": ["motivational", "not_motivational"],
    "sentiment": ["positive", "neutral", "negative"],
}
HEADINGS = {"humor": "HUMOR", "sarcasm": "SARCASM", "motivation": "MOTIVATION", "sentiment": "OVERALL SENTIMENT"}
N_RECORDS = 6992

WORDS = "when you the boss says monday again me trying to study exam week friday feeling cat dog coffee " \
        "meanwhile nobody literally everyone mask hand washing avoid conflict".split()


def csv_field(s):
    if any(c in s for c in ',"\n\r'):
        return '"' + s.replace('"', '""') + '"'
    return s


def write_table1():
    rng = random.Random(6992)
    columns = {}
    for task, (col, levels) in TABLE1.items():
        values = [raw for raw, count, _ in levels for _ in range(count)]
        assert len(values) == N_RECORDS, task
        rng.shuffle(values)
        columns[task] = values
    header = ["image_name", "text_ocr", "text_corrected", "humour", "sarcasm", "offensive", "motivational",
              "overall_sentiment"]
    rows = [",".join(header)]
    for i in range(N_RECORDS):
        words = rng.choices(WORDS, k=rng.randint(0, 9))
        text = " ".join(words)
        if i % 97 == 0:
            text = f'"{text}", she said'
        if i % 211 == 0:
            text = text + "\nsecond line"
        row = [f"image_{i + 1}.jpg", csv_field(text.upper()), csv_field(text), columns["humor"][i],
               columns["sarcasm"][i], "not_offensive", columns["motivation"][i], columns["sentiment"][i]]
        rows.append(",".join(row))
    d = TESTDATA / "table1"
    (d / "memotion_fixture.csv").write_text("\r\n".join(rows) + "\r\n", encoding="utf-8")

    schema = {
        "format": "csv",
        "columns": {"image_name": "image_name", "text": "text_corrected", "humour": "humour", "sarcasm": "sarcasm",
                    "motivational": "motivational", "overall_sentiment": "overall_sentiment"},
        "labels": {task: {raw: CLASS_OF[raw] for raw, _, _ in levels} for task, (_, levels) in TABLE1.items()},
        "summary": {task: {raw: col for raw, _, col in levels} for task, (_, levels) in TABLE1.items()},
    }
    (d / "schema.json").write_text(json.dumps(schema, indent=2) + "\n", encoding="utf-8")

    out = [f"{N_RECORDS} records", "", f"{'':<20}{'POSITIVE':>10}{'NEGATIVE':>10}{'NEUTRAL':>10}"]
    for task, (_, levels) in TABLE1.items():
        s = {"positive": 0, "negative": 0, "neutral": 0}
        for _, count, col in levels:
            s[col] += count
        out.append(f"{HEADINGS[task]:<20}{s['positive']:>10}{s['negative']:>10}{s['neutral']:>10}")
    out.append("")
    for task, (_, levels) in TABLE1.items():
        counts = {c: 0 for c in CLASS_ORDER[task]}
        for raw, count, _ in levels:
            counts[CLASS_OF[raw]] += count
        out.append(f"{task}: " + " ".join(f"{c}={n}" for c, n in counts.items()))
    (d / "expected_ingest.txt").write_text("\n".join(out) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Toy multimodal dataset for end-to-end CLI runs

TOY_WORDS = {
    "humor": ["hilarious joke", "boring lecture"],
    "sarcasm": ["obviously genius", "honest opinion"],
    "motivation": ["never give up", "stay in bed"],
    "sentiment": ["love this", "just okay", "hate this"],
}
TOY_RAW = {
    "humor": ["funny", "not_funny"],
    "sarcasm": ["sarcastic", "not_sarcastic"],
    "motivation": ["motivational", "not_motivational"],
    "sentiment": ["positive", "neutral", "negative"],
}


def write_ppm(path, width, height, pixels):
    with open(path, "wb") as f:
        f.write(f"P6\n{width} {height}\n255\n".encode())
        f.write(bytes(pixels))


def write_toy():
    d = TESTDATA / "toy"
    rng = random.Random(48)
    rows = ["image_name,text,humour,sarcasm,motivational,overall_sentiment"]
    vocab = set()
    for i in range(48):
        lab = [i % 2, (i // 2) % 2, (i // 4) % 2, (i // 8) % 3]
        size = 16
        pixels = []
        for y in range(size):
            for x in range(size):
                q = (y // 8) * 2 + (x // 8)
                level = 40 + 160 * lab[q] if q < 3 else 30 + 90 * lab[3]
                pixels += [max(0, min(255, level + rng.randint(-10, 10))) for _ in range(3)]
        write_ppm(d / "images" / f"meme_{i:02d}.ppm", size, size, pixels)
        phrases = [TOY_WORDS[t][lab[k]] for k, t in enumerate(TOY_WORDS)]
        rng.shuffle(phrases)
        text = " ".join(phrases).upper() if i % 5 == 0 else " ".join(phrases)
        if i % 7 == 0:
            text += " \U0001F602"
        for p in phrases:
            vocab.update(p.split())
        row = [f"meme_{i:02d}.ppm", csv_field(text)] + [TOY_RAW[t][lab[k]] for k, t in enumerate(TOY_RAW)]
        rows.append(",".join(row))
    vocab.update("face with tears of joy".split())
    (d / "annotations.csv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    (d / "vocab.txt").write_text("\n".join(sorted(vocab)) + "\n", encoding="utf-8")
    schema = {"labels": {
        "humor": {"funny": "funny", "not_funny": "not_funny"},
        "sarcasm": {"sarcastic": "sarcastic", "not_sarcastic": "not_sarcastic"},
        "motivation": {"motivational": "motivational", "not_motivational": "not_motivational"},
        "sentiment": {"positive": "positive", "neutral": "neutral", "negative": "negative"},
    }}
    (d / "schema.json").write_text(json.dumps(schema, indent=2) + "\n", encoding="utf-8")


def main():
    for p in (DATA, TESTDATA / "table1", TESTDATA / "toy" / "images"):
        p.mkdir(parents=True, exist_ok=True)
    lexicon = write_lexicon()
    write_golden(lexicon)
    write_porter_reference()
    write_table1()
    write_toy()


if __name__ == "__main__":
    main()
