"""Recount the end-to-end fixture with plain regexes; prints the expected table as JSON."""
import html, json, re, sys
from collections import Counter, defaultdict

STATES = {"tx": "TX", "texas": "TX", "ca": "CA", "california": "CA"}
d = sys.argv[1]
profiles = [json.loads(l) for l in open(f"{d}/profiles.jsonl") if l.strip()]
posts = [json.loads(l) for l in open(f"{d}/posts.jsonl") if l.strip()]

owner, users, gender, industry, city = {}, Counter(), defaultdict(Counter), defaultdict(Counter), Counter()
for p in profiles:
    parts = [s.strip() for s in p["location"].split(",")]
    st = STATES[parts[-1].lower()]
    users[st] += 1
    for b in p["blogs"]:
        owner[b] = st
    if p.get("gender"):
        gender[st][p["gender"].lower()] += 1
    if p.get("industry"):
        industry[p["industry"].lower()][st] += 1
    if len(parts) > 1:
        city[f"{parts[0].title()}|{st}"] += 1

words, totals = defaultdict(Counter), Counter()
for post in posts:
    text = re.sub(r"(?is)<(script|style)\b.*?</\1\s*>", " ", post["html"])
    text = re.sub(r"(?s)<!--.*?-->", " ", text)
    text = html.unescape(re.sub(r"<[^>]*>", " ", text))
    for tok in re.findall(r"[a-z0-9]+(?:'[a-z0-9]+)*", text.lower()):
        words[tok][owner[post["blog_id"]]] += 1
        totals[owner[post["blog_id"]]] += 1

print(json.dumps({"doc_count": len(posts), "token_totals": totals, "user_counts": users,
                  "gender": gender, "industry": industry, "city": city, "words": words},
                 sort_keys=True, indent=1))
