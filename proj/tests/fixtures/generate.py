"""Regenerates the synthetic fixtures: threads.jsonl, e2e_mock.json, parse_cases.jsonl."""
import json
import random
from pathlib import Path

HERE = Path(__file__).resolve().parent

THREADS = [
    ("t01", "Why do my knees ache after running?", None,
     ["I had the same ache last spring and rest fixed it.",
      "Knee pain after running is often caused by weak thigh muscles. Try stretching before you run."],
     [(0, "I had the same ache last spring", "EXPERIENCE"),
      (1, "often caused by weak thigh muscles", "CAUSE"),
      (1, "Try stretching before you run.", "SUGGESTION")],
     {"EXPERIENCE": "In user's experience, rest relieved a similar ache.",
      "CAUSE": "Some of the causes include weak thigh muscles.",
      "SUGGESTION": "It is suggested that stretching before running helps."}),
    ("t02", "Is it safe to take ibuprofen every day?", "I have mild back pain.",
     ["Daily ibuprofen can irritate the stomach lining over time.",
      "Have you asked your pharmacist about a gentler option?"],
     [(0, "Daily ibuprofen can irritate the stomach lining", "INFORMATION"),
      (1, "Have you asked your pharmacist about a gentler option?", "QUESTION")],
     {"INFORMATION": "For information purposes, daily ibuprofen may irritate the stomach.",
      "QUESTION": "It is inquired whether a pharmacist suggested a gentler option."}),
    ("t03", "What helps with seasonal allergies?", None,
     ["Antihistamines reduce sneezing for most people.",
      "My sister takes a nasal spray every morning and feels much better.",
      "Keep windows closed when pollen counts are high."],
     [(0, "Antihistamines reduce sneezing", "INFORMATION"),
      (1, "My sister takes a nasal spray every morning", "EXPERIENCE"),
      (2, "Keep windows closed when pollen counts are high.", "SUGGESTION")],
     {"INFORMATION": "For information purposes, antihistamines reduce sneezing.",
      "EXPERIENCE": "In user's experience, a daily nasal spray helped a relative.",
      "SUGGESTION": "It is suggested that windows stay closed on high pollen days."}),
    ("t04", "Can stress cause headaches?", None,
     ["Stress tightens neck muscles, which can trigger tension headaches.",
      "I get headaches every exam week."],
     [(0, "Stress tightens neck muscles", "CAUSE"),
      (0, "which can trigger tension headaches", "INFORMATION"),
      (1, "I get headaches every exam week.", "EXPERIENCE")],
     {"CAUSE": "Some of the causes include tight neck muscles from stress.",
      "INFORMATION": "For information purposes, tension headaches can follow muscle tightness.",
      "EXPERIENCE": "In user's experience, headaches appear during exam weeks."}),
    ("t05", "How much water should I drink?", None,
     ["Most adults need about two litres a day.",
      "Drink more when it is hot or when you exercise."],
     [(0, "Most adults need about two litres a day.", "INFORMATION"),
      (1, "Drink more when it is hot", "SUGGESTION")],
     {"INFORMATION": "For information purposes, adults need about two litres daily.",
      "SUGGESTION": "It is suggested that intake rises in heat or exercise."}),
    ("t06", "Why am I always tired in the afternoon?", None,
     ["A heavy lunch can make you sleepy because digestion draws energy.",
      "Try a short walk after eating.",
      "I felt the same until I cut down on sugar."],
     [(0, "A heavy lunch can make you sleepy", "CAUSE"),
      (1, "Try a short walk after eating.", "SUGGESTION"),
      (2, "I felt the same until I cut down on sugar.", "EXPERIENCE")],
     {"CAUSE": "Some of the causes include a heavy lunch.",
      "SUGGESTION": "It is suggested that a short walk after eating helps.",
      "EXPERIENCE": "In user's experience, cutting sugar ended afternoon fatigue."}),
    ("t07", "Is a fever of 38.5 dangerous for a child?", "My son is four.",
     ["A fever of 38.5 is common and usually not dangerous.",
      "Is he drinking enough fluids?",
      "See a doctor if it lasts more than three days."],
     [(0, "A fever of 38.5 is common and usually not dangerous.", "INFORMATION"),
      (1, "Is he drinking enough fluids?", "QUESTION"),
      (2, "See a doctor if it lasts more than three days.", "SUGGESTION")],
     {"INFORMATION": "For information purposes, a 38.5 fever is common in children.",
      "QUESTION": "It is inquired whether the child drinks enough fluids.",
      "SUGGESTION": "It is suggested that a doctor is seen after three days."}),
    ("t08", "What causes heartburn at night?", None,
     ["Lying down soon after a meal lets acid flow back up.",
      "Raise the head of your bed a few inches."],
     [(0, "Lying down soon after a meal lets acid flow back up.", "CAUSE"),
      (1, "Raise the head of your bed a few inches.", "SUGGESTION")],
     {"CAUSE": "Some of the causes include lying down right after meals.",
      "SUGGESTION": "It is suggested that the bed head is raised."}),
    ("t09", "Do I need antibiotics for a cold?", None,
     ["Colds are viral, so antibiotics do not help.",
      "I took them once and they did nothing for me."],
     [(0, "Colds are viral, so antibiotics do not help.", "INFORMATION"),
      (1, "I took them once and they did nothing for me.", "EXPERIENCE")],
     {"INFORMATION": "For information purposes, antibiotics do not treat viral colds.",
      "EXPERIENCE": "In user's experience, antibiotics did not help a cold."}),
    ("t10", "How can I sleep better?", None,
     ["Keep a fixed bedtime and avoid screens late at night.",
      "Caffeine after noon kept me awake for years.",
      "Does your room get enough darkness at night?"],
     [(0, "Keep a fixed bedtime and avoid screens late at night.", "SUGGESTION"),
      (1, "Caffeine after noon kept me awake for years.", "EXPERIENCE"),
      (2, "Does your room get enough darkness at night?", "QUESTION")],
     {"SUGGESTION": "It is suggested that bedtime is fixed and screens avoided.",
      "EXPERIENCE": "In user's experience, afternoon caffeine caused sleeplessness.",
      "QUESTION": "It is inquired whether the bedroom is dark enough."}),
]

ORDER = ["EXPERIENCE", "INFORMATION", "CAUSE", "SUGGESTION", "QUESTION"]


def thread_record(t):
    tid, q, ctx, answers, spans, summaries = t
    recs = []
    for a, text, label in spans:
        start = answers[a].index(text)
        recs.append({"answer_index": a, "start": start, "end": start + len(text), "text": text, "label": label})
    return {"id": tid, "question": q, "context": ctx, "answers": answers, "spans": recs, "summaries": summaries}


def serialize_spans(spans):
    ordered = sorted(spans, key=lambda s: ORDER.index(s[2]))
    return "".join(f'span: "{text}", label: "{label}"\n' for _, text, label in ordered)


def serialize_summaries(summaries):
    return "".join(f'{label} Summary: "{summaries[label]}"\n' for label in ORDER if label in summaries)


def write_threads():
    with open(HERE / "threads.jsonl", "w") as f:
        for t in THREADS:
            f.write(json.dumps(thread_record(t), ensure_ascii=False) + "\n")


def write_mock():
    rules = []
    for tid, q, _, _, spans, summaries in THREADS:
        rules.append({"contains": [q, "expert annotator"], "response": serialize_spans(spans)})
        rules.append({"contains": [q, "While writing summaries"], "response": serialize_summaries(summaries)})
    with open(HERE / "e2e_mock.json", "w") as f:
        json.dump({"rules": rules, "echo_fallback": False}, f, indent=2, ensure_ascii=False)
        f.write("\n")


WORDS = ["pain", "rest", "knee", "sleep", "water", "fever", "doctor", "stress", "muscle", "diet",
         "allergy", "tablet", "3", "mg", "week", "often", "because", "try", "my", "the"]


def write_parse_cases():
    rng = random.Random(20240617)
    with open(HERE / "parse_cases.jsonl", "w") as f:
        for i in range(50):
            n = rng.randint(1, 5)
            items = []
            for _ in range(n):
                text = " ".join(rng.choice(WORDS) for _ in range(rng.randint(1, 8)))
                if rng.random() < 0.2:
                    text += rng.choice([".", ",", "!", "?"])
                items.append({"text": text, "label": rng.choice(ORDER)})
            lines = [f'span: "{it["text"]}", label: "{it["label"]}"' for it in items]
            preamble = rng.choice(["", "Here are the spans:\n", "Sure.\n\n"])
            raw = preamble + "\n".join(lines) + rng.choice(["", "\n", "\n\nDone."])
            f.write(json.dumps({"raw": raw, "expected": items}) + "\n")


if __name__ == "__main__":
    write_threads()
    write_mock()
    write_parse_cases()
