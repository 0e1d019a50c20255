"""Regenerates sample_transcript.txt: a synthetic, seeded ~10k-word interview
with four participants about a child's heart surgery. Run from this directory."""

import random

rng = random.Random(20241018)

TOPICS = {
    "diagnosis": [
        "when the cardiologist called with the scan results I had to sit down in the parking lot",
        "nobody in our family had ever heard of a coronary anomaly before that appointment",
        "the diagnosis came after a routine physical for the soccer team",
        "we kept asking whether the echo could have been read wrong",
        "the word anomaly sounded so much scarier than the doctor meant it",
        "I searched the diagnosis online that night and regretted it immediately",
    ],
    "sports": [
        "he was told to stop playing soccer until the surgery team decided",
        "being pulled from the team felt like losing his friends as well as the sport",
        "the coach did not know how to explain the restriction to the other players",
        "she asks every week when she can run again",
        "we argued about whether gym class counted as exercise",
        "sports clearance became the question behind every visit",
    ],
    "surgery": [
        "the night before surgery none of us slept",
        "the surgeon drew the artery on a napkin so we could understand the repair",
        "waiting during the surgery was the longest six hours of my life",
        "seeing him in the intensive care unit with all the tubes was terrifying",
        "the surgeon came out smiling and I finally breathed",
        "we worried the surgery itself carried more risk than the anomaly",
    ],
    "uncertainty": [
        "no one could tell us the exact risk of sudden death",
        "every doctor gave a slightly different number for the risk",
        "living with uncertainty is harder than bad news",
        "I check on him at night to make sure he is breathing",
        "the uncertainty follows us into every ordinary day",
        "we were told the risk is small but small still feels enormous",
    ],
    "communication": [
        "the nurse practitioner explained things in words we could actually use",
        "I wish someone had given us a written summary after each appointment",
        "the team answered emails quickly which calmed me down",
        "medical terms flew past us during the first consultation",
        "having one contact person at the clinic made everything easier",
        "we recorded the appointments so we could listen again at home",
    ],
    "support": [
        "other parents in the online group understood without explanation",
        "my sister took the younger kids so we could stay at the hospital",
        "the social worker helped us with parking and meals",
        "friends brought food for weeks after we came home",
        "talking to a family who had been through the same surgery helped most",
        "our church organized rides to the hospital",
    ],
    "costs": [
        "insurance denied the first request for the imaging",
        "the bills kept arriving months after the surgery",
        "I had to take unpaid leave from work during recovery",
        "travel to the specialist center cost more than we expected",
        "we spent hours on the phone with insurance about the follow up scans",
        "money worries sat on top of the medical worries",
    ],
    "recovery": [
        "recovery at home was slower than the discharge papers suggested",
        "he was back at school in four weeks with a note for the nurse",
        "the scar became something she shows off to her friends",
        "cardiac rehab gave him confidence to move again",
        "follow up scans showed the repair was working",
        "slowly our family found a new normal after recovery",
    ],
}

OPENERS = ["Honestly,", "I remember", "For us,", "Looking back,", "At first", "What I recall is that", "Mostly", "Even now"]
CLOSERS = [
    "and that stayed with me.",
    "which still surprises me.",
    "and we talked about it for days.",
    "if that makes sense.",
    "and I think about it often.",
    "so that was hard.",
    ".",
]

PARTICIPANTS = [1, 2, 3, 4]
seq = {p: 0 for p in PARTICIPANTS}
topic_names = sorted(TOPICS)

lines = []
words = 0
while words < 10_000:
    p = rng.choice(PARTICIPANTS)
    seq[p] += 1
    topic = rng.choice(topic_names)
    parts = []
    for _ in range(rng.randint(1, 3)):
        s = rng.choice(TOPICS[topic])
        if rng.random() < 0.3:
            s = rng.choice(TOPICS[rng.choice(topic_names)])
        opener = rng.choice(OPENERS)
        closer = rng.choice(CLOSERS)
        sentence = f"{opener} {s}" + (closer if closer == "." else f" {closer}")
        parts.append(sentence)
    text = " ".join(parts)
    lines.append(f"[P{p}_S{seq[p]:03d}] {text}")
    words += len(text.split())

with open("sample_transcript.txt", "w", encoding="utf-8") as f:
    f.write("\n".join(lines) + "\n")
print(f"{len(lines)} utterances, {words} words")
