#!/usr/bin/env python3
"""Regenerates the bundled fixture data.

Everything here is synthetic except the real site names and addresses in
corpus/sites.json, the per-forum hit counts in forums/searches.jsonl, the 3.3%
share of HackerWeb in forums/shares.jsonl and the sensor search total of 582.
Device addresses come from the documentation ranges (RFC 5737).

Run from this directory: python3 generate.py
"""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent
FIXED_TIME = 1719792000  # 2024-07-01T00:00:00Z


def write(path, text):
    p = ROOT / path
    p.parent.mkdir(parents=True, exist_ok=True)
    p.write_text(text, encoding="utf-8", newline="\n")


def write_json(path, value):
    write(path, json.dumps(value, indent=2, ensure_ascii=False) + "\n")


def write_jsonl(path, rows):
    write(path, "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in rows))


def page(title, paragraphs, links=()):
    body = "".join(f"<p>{p}</p>\n" for p in paragraphs)
    anchors = "".join(f'<a href="{href}">{text}</a>\n' for href, text in links)
    return (
        "<!doctype html>\n<html><head><title>" + title + "</title>\n"
        "<style>body { font-family: monospace; }</style></head>\n"
        "<body><h1>" + title + "</h1>\n" + body + anchors + "</body></html>\n"
    )


# ---------------------------------------------------------------- forums

def _date(offset):
    import datetime

    d = datetime.date(2023, 12, 1) + datetime.timedelta(days=offset)
    return d.isoformat() + "T12:00:00Z"


IOT_POSTS = [
    "Selling a fresh botnet loader, spreads through weak telnet logins",
    "Mirai variant source dump, who has tested it",
    "Temperature sensor panels left on the open web with no login",
    "Hijacking smart home hubs through the cloud bridge",
    "Guide to internet of things pivoting once you are inside the LAN",
    "Found a firmware dump for a cheap router, looking for help reversing",
    "Which iot device brands still ship default passwords",
    "Pressure sensor dashboards are wide open, collecting a list",
    "Botnet rental for stress testing, prices inside",
    "iot hacking starter kit, share your tools",
    "Best way to keep a botnet alive after reboots",
    "Exposed smart home cameras and thermostats, discuss",
]

OTHER_POSTS = [
    "Looking for a good crypter that is still undetected",
    "Password cracking rig build, which GPUs",
    "Phishing page templates for webmail, need feedback",
    "How do you stay anonymous when buying VPS hosting",
    "Reverse engineering a license check in a desktop app",
    "SQL injection cheat sheet updated for 2024",
    "Keylogger that survives antivirus scans, any ideas",
    "Carding is dead, change my mind",
    "WiFi handshake capture and cracking walkthrough",
    "Introduce yourself thread",
    "Rules of the board, read before posting",
    "Which Linux distro for pentesting",
    "Tutorial on writing shellcode by hand",
    "Leaked combo lists are mostly recycled garbage",
    "Best books on exploit development",
    "Cracked accounts giveaway, reply to unlock",
    "Remote desktop brute forcing tips",
    "Need a mentor for malware analysis",
    "Opsec mistakes that got people caught",
    "Selling access to a small web shop database",
]

CAMERA_POSTS = [
    "Public webcam index with default admin logins",
    "IP camera streams you can watch without a password",
    "CCTV recorder web panels, which models are weakest",
]

SCADA_POSTS = [
    "SCADA HMI pages exposed on the internet, share findings",
    "Modbus scanning basics for water treatment sites",
]

SHARE_FORUMS = [
    # name, total posts, matching posts
    ("HackerWeb", 1000, 33),
    ("HackHound", 30, 8),
    ("Hackers Tribe", 25, 6),
    ("School-of-HackNet", 25, 4),
    ("iC0de", 40, 8),
    ("Rhyliv", 30, 5),
    ("TorChan", 50, 7),
]


def share_posts():
    rng = random.Random(20240701)
    rows = []
    for forum, total, matching in SHARE_FORUMS:
        slots = [True] * matching + [False] * (total - matching)
        rng.shuffle(slots)
        for i, hit in enumerate(slots):
            if hit:
                text = rng.choice(IOT_POSTS)
            else:
                r = rng.random()
                if r < 0.06:
                    text = rng.choice(CAMERA_POSTS)
                elif r < 0.09:
                    text = rng.choice(SCADA_POSTS)
                else:
                    text = rng.choice(OTHER_POSTS)
            rows.append(
                {
                    "forum": forum,
                    "post_id": f"{forum.lower().replace(' ', '-')}-{i + 1:04d}",
                    "text": text,
                    "posted_at": _date(rng.randrange(0, 213)),
                }
            )
    return rows


SEARCH_HITS = {
    "HackHound": {
        "hits": [
            "Botnet, malware and RATs for Android devices, all aimed at the Internet of Things",
            "Internet of Things malware builder, Android RAT included",
            "Taking over Internet of Things gadgets with a botnet",
            "Malware for Internet of Things routers, tested on Android phones",
        ],
        "misses": [
            "Looking for a crypter",
            "IoT devices but not what you think, just a rant about smart fridges",
            "Botnet panel for Windows hosts only",
            "Introduce yourself thread",
            "Android RAT with file manager",
        ],
    },
    "Hackers Tribe": {
        "hits": [
            "How to hack Internet of Things sensors on factory floors",
            "Hack Internet of Things file sharing in devices through SMB shares",
            "Tutorial: hack internet of things temperature sensors",
            "Who can hack Internet of Things cameras, paying well",
            "Anyone managed to hack Internet of Things door locks",
        ],
        "misses": [
            "Internet of Things security is a joke, discuss",
            "Hacking Internet of Things is overrated",
            "Sensors for my home lab",
            "Rules of the board",
        ],
    },
    "School-of-HackNet": {
        "hits": [
            "Hack devices nearby: phones listening to the network",
        ],
        "misses": [
            "Hacking devices class starts next week",
            "Hack-free devices do not exist",
            "Phones and network basics",
        ],
    },
    "HackerWeb": {
        "hits": [
            "Knife for IoT: an XMPP toolkit to hack Internet of Things gateways",
        ],
        "misses": [
            "Internet of Things pentest report template",
            "XMPP server hardening",
            "How hackers think about the internet of things",
            "SQL injection cheat sheet",
            "Hack internet-connected things, a rant",
        ],
    },
}

SEARCH_QUERIES = [
    {"forum": "HackHound", "keywords": ["Internet of Things"]},
    {"forum": "Hackers Tribe", "keywords": ["Hack Internet of Things"]},
    {"forum": "School-of-HackNet", "keywords": ["Hack devices"]},
    {"forum": "HackerWeb", "keywords": ["Hack Internet of Things"]},
]


def search_posts():
    rng = random.Random(4511)
    rows = []
    for forum, posts in SEARCH_HITS.items():
        texts = posts["hits"] + posts["misses"]
        rng.shuffle(texts)
        for i, text in enumerate(texts):
            rows.append(
                {
                    "forum": forum,
                    "post_id": f"{forum.lower().replace(' ', '-')}-t{i + 1:03d}",
                    "text": text,
                    "posted_at": _date(rng.randrange(0, 213)),
                }
            )
    return rows


# ------------------------------------------------------------------ scan

ORGS = ["Example Telecom", "Sample Hosting", "Doc Networks", ""]
COUNTRIES = [("Norway", "Bergen"), ("Chile", "Valparaiso"), ("Kenya", "Mombasa"), ("Canada", "Halifax")]


def banner(port, product):
    if port in (80, 8080, 8081):
        return (
            "HTTP/1.1 200 OK\r\nServer: " + product + "\r\n"
            "Content-Type: text/html\r\nWWW-Authenticate: Basic realm=\"device\"\r\n\r\n"
        )
    if port == 502:
        return "Modbus/TCP unit 1\n"
    return product + " service ready\r\n"


def match(rng, ip, port, product, full=False):
    org = rng.choice(ORGS)
    country, city = rng.choice(COUNTRIES)
    m = {
        "ip_str": ip,
        "port": port,
        "data": banner(port, product),
        "timestamp": _date(rng.randrange(180, 213))[:-1] + ".000000",
    }
    if org or full:
        m["org"] = org or "Example Telecom"
    if full or rng.random() < 0.5:
        m["product"] = product
    if full or rng.random() < 0.3:
        m["os"] = "Linux 3.x"
    m["location"] = {"country_name": country, "city": city if (full or rng.random() < 0.7) else None}
    return m


def scan():
    rng = random.Random(582)
    sensor1 = [match(rng, "198.51.100.17", 8080, "Pbar-box", full=True)]
    ports = [8080, 80, 8080, 443, 8080, 23, 80]
    for i, p in enumerate(ports):
        sensor1.append(match(rng, f"192.0.2.{10 + i * 7}", p, "sensor-web"))
    sensor2 = []
    for i, p in enumerate([8080, 80, 8081, 8080, 443]):
        sensor2.append(match(rng, f"203.0.113.{40 + i * 3}", p, "thermo-panel"))
    webcam = [match(rng, f"198.51.100.{100 + i}", p, "cam-httpd") for i, p in enumerate([80, 8080, 554, 80])]
    scada = [match(rng, f"203.0.113.{200 + i}", p, "hmi-portal") for i, p in enumerate([502, 80])]

    write_json("scan/sensor.page1.json", {"total": 582, "matches": sensor1})
    write_json("scan/sensor.page2.json", {"total": 582, "matches": sensor2})
    write_json("scan/webcam.page1.json", {"total": 4, "matches": webcam})
    write_json("scan/scada.page1.json", {"total": 2, "matches": scada})
    write_json("scan/nothing.page1.json", {"total": 0, "matches": []})
    write_json("scan/invalid-key.json", {"error": "Invalid API key"})
    write_json(
        "scan/manifest.json",
        {
            "valid_keys": ["fixture-key"],
            "queries": {
                "sensor": ["sensor.page1.json", "sensor.page2.json"],
                "webcam": ["webcam.page1.json"],
                "scada": ["scada.page1.json"],
                "nothing": ["nothing.page1.json"],
            },
        },
    )


# ----------------------------------------------------------------- crawl

def crawl_site():
    host = "http://forum.fixture.onion"
    pages = {
        "index": ("Fixture Forum", ["Board index for the fixture forum. Botnet and sensor threads inside."],
                  [("/boards/iot.html", "IoT board"), ("/boards/market.html", "Market board"),
                   ("#top", "top")]),
        "iot": ("IoT board", ["Threads about smart home hubs and exposed sensor panels."],
                [("thread-1.html", "Mirai thread"), ("http://other.fixture.onion/", "partner site"),
                 ("mailto:admin@forum.fixture.onion", "mail")]),
        "market": ("Market board", ["Hacking services and botnet rentals."],
                   [("/boards/thread-2.html", "rental thread"), ("/", "home"),
                    ("/boards/iot.html?", "IoT board again")]),
        "thread-1": ("Mirai thread", ["A Mirai variant spreading over telnet to every iot device it finds."],
                     [("/archive/deep.html", "archive")]),
        "thread-2": ("Rental thread", ["Botnet rental prices, payment in bitcoin only."],
                     [("/boards/iot.html", "IoT board")]),
    }
    files = {
        "index": ("/", "pages/index.html"),
        "iot": ("/boards/iot.html", "pages/iot.html"),
        "market": ("/boards/market.html", "pages/market.html"),
        "thread-1": ("/boards/thread-1.html", "pages/thread-1.html"),
        "thread-2": ("/boards/thread-2.html", "pages/thread-2.html"),
    }
    entries = []
    for key, (title, paras, links) in pages.items():
        path, file = files[key]
        write(f"crawl/{file}", page(title, paras, links))
        entries.append({"url": host + path, "file": file, "content_type": "text/html", "fetched_at": FIXED_TIME})
    write("crawl/pages/deep.html", page("Archive", ["Old threads beyond the crawl depth."]))
    entries.append({"url": host + "/archive/deep.html", "file": "pages/deep.html", "content_type": "text/html"})
    write("crawl/pages/other.html", page("Partner", ["A different host that is out of scope."]))
    entries.append({"url": "http://other.fixture.onion/", "file": "pages/other.html", "content_type": "text/html"})
    write_json("crawl/index.json", {"pages": entries})


# ---------------------------------------------------------------- corpus

SITES = [
    ("http://hansamkt2rr6nfg3.onion/search/?q=hacker&c=59", "Hansa Market", "Dark market - Hacking Services", "market",
     "Listings for hacking services, exploit kit bundles and botnet access. Vendors accept bitcoin. Search results for hacker."),
    ("http://armsforsd.com/index.html", "Arms and Ammunition", "Guns & Ammunition", "market",
     "Firearms and ammunition shipped discreetly. Rifles, pistols and ammunition boxes with stealth packaging."),
    ("http://anonymzn3twqpxq5.onion/read.php?2", "anonymzn3", "Anonymous discussion board", "forum",
     "Freedom fighters of the digital age unite. Threads on hacktivism, leaks and the free world."),
    ("http://2ogmrlfzdthnwkez.onion/info.php", "Rent A Hacker", "Hacking services", "market",
     "Rent a hacker for any job: DDoS service, account takeover, hacker for hire with escrow."),
    ("http://opnju4nyz7wbypme.onion/weblog/index.html", "Alpha7-Bravo- Blog", "Political Hate Ideology", "ideology",
     "Essays for freedom fighters resisting the state. The resistance needs a digital robin hood."),
    ("http://duskgytldkxiuqc6.onion/comsense.html", "Thoman Paine Common Sense", "Political Hate Ideology", "ideology",
     "Common sense for the free world. Freedom fighters must organize against tyranny."),
    ("http://oxwugzccvk3dk6tj.onion/uk/res/16.html", "Random United Kingdom", "Hate group forum", "forum",
     "Anonymous board thread. Calls for resistance and a personal army to raid rival boards."),
    ("http://rrcc5uuudhh4oz3c.onion/", "Intel Exchange", "Hacking Forum", "forum",
     "Intel Exchange hacking forum: data leak trading, botnet logs and hacking services requests."),
    ("http://6sgjmi53igmg7fm7.onion/index.php?title=Main_Page", "Bugged Planet", "Hate group forum", "forum",
     "Wiki on surveillance vendors, CCTV networks and IP camera suppliers used by states."),
    ("http://f2mz6ttcwyslnz5u.onion/", "Jaggers Blog", "Hacking Blog and Forum", "blog",
     "Blog posts on firmware dump techniques, webcam exploits and iot hacking writeups."),
    ("http://zw3crggtadila2sg.onion/imageboard/", "TorChan", "Hacking Discussions Forum", "forum",
     "Imageboard threads: botnet builders, smart home takeovers and sensor dashboards found online."),
    ("https://app.hackerwebapp.com/", "HackerWeb", "Cyber Security Hacking Discussion Forum", "forum",
     "Aggregated posts from eighteen forums. Internet of things threads, XMPP tooling, exploit kit reviews."),
    ("http://hackhound.org/forums/page/index.html", "HackHound", "Cyber Security Hacking Discussion Forum", "forum",
     "Botnet, malware and RATs for Android devices. Internet of things section and freedom fighters lounge."),
    ("https://hackerstribe.com/", "HackersTribe", "Hacking Discussions Forum", "forum",
     "Hack internet of things sensors, file sharing in devices, and general hacking services chatter."),
    ("http://www.school-of-hack.net/", "School-of-HackNet", "Hacking Discussions Forum", "forum",
     "Lessons on phones listening to the network, rent a hacker scams and password cracking."),
    ("http://www.ic0de.org/activity.php?s=e72472d21ab6ba2672b1b13f8c012671", "iC0de", "Cyber Security Hacking Discussion Forum", "forum",
     "Activity feed: exploit kit release, botnet panel leak, scada scanner scripts."),
    ("http://valhallaxmn3fydu.onion/products/25348", "Valhalla", "Dark market - Hacking Services", "market",
     "Product listing: hacking services package, stolen identities and a ddos service subscription."),
    ("https://rhyliv.com/", "Rhyliv", "Cyber Security Hacking Discussion Forum", "forum",
     "Forum threads on modbus fuzzing, PLC access and iot device takeovers."),
    ("http://www.alokab.com/", "Alokbab", "Suspicious Terror Group Site", "terror-suspect",
     "Statements addressed to the free world and recruitment for freedom fighters."),
    ("http://www.fadaian.org/file/manch.uk.html", "Fadaian", "Suspicious Terror Group Site", "terror-suspect",
     "Manifesto pages praising resistance and armed freedom fighters abroad."),
    ("https://uniregistry.com/market/domain/cihad.net?landerid=www57aacde58c16c2.39985067", "CiHad.net",
     "Bogus Site - Suspicious Terror Group", "terror-suspect",
     "Parked domain page. Resistance slogans and a broken contact form for the free world."),
    ("http://oasisnvwltxvmqqz.onion/79", "Oasis", "Dark market - Hacking Services", "market",
     "Vendor shop: hacker for hire, exploit kit rentals, botnet installs priced per thousand."),
    # only 22 real sites have a readable address; this one is synthetic
    ("http://cphrbzr2vq5kx7ma.onion/listings", "Cipher Bazaar", "Dark market - Hacking Services (synthetic)", "market",
     "Listings for webcam access, iot device shells and personal army DDoS packages."),
]

OFF_TOPIC = [
    ("http://newsportal.example/", "Daily News Portal", "News", "other",
     "Weather, sports scores and local elections. Markets closed higher today."),
    ("http://gamezone.example/", "Game Zone", "Gaming", "other",
     "Patch notes for the new season, tournament brackets and controller reviews."),
    ("http://recipes.example/", "Recipe Box", "Cooking", "other",
     "Slow cooker stews, sourdough starters and weeknight pasta dishes."),
]


def corpus():
    entries, annotations = [], []
    for i, (url, name, desc, cat, text) in enumerate(SITES + OFF_TOPIC):
        file = f"pages/site{i + 1:02d}.html"
        write(f"corpus/{file}", page(name, [text, "Description: " + desc + "."]))
        entries.append({"url": url, "file": file, "content_type": "text/html", "fetched_at": FIXED_TIME})
        annotations.append({"url": url, "name": name, "description": desc, "category": cat})
    write_json("corpus/index.json", {"pages": entries})
    write_json("corpus/sites.json", annotations)


# ---------------------------------------------------------------- search

HACKHOUND = "http://hackhound.org/forums/page/index.html"
ANONYMZN3 = "http://anonymzn3twqpxq5.onion/read.php?2"
ALPHA7 = "http://opnju4nyz7wbypme.onion/weblog/index.html"
PAINE = "http://duskgytldkxiuqc6.onion/comsense.html"
HANSA = "http://hansamkt2rr6nfg3.onion/search/?q=hacker&c=59"
VALHALLA = "http://valhallaxmn3fydu.onion/products/25348"
OASIS = "http://oasisnvwltxvmqqz.onion/79"
RENT = "http://2ogmrlfzdthnwkez.onion/info.php"
TORCHAN = "http://zw3crggtadila2sg.onion/imageboard/"
INTEL = "http://rrcc5uuudhh4oz3c.onion/"

PROVIDERS = {
    "torch": {
        "endpoint": "http://torch.fixture.onion/search?q={query}",
        "backlink_query": "link:{domain}",
        "result_path": "results[].url",
        "wrap": lambda urls: {"results": [{"url": u, "title": ""} for u in urls]},
        "answers": {
            "freedom fighters": [HACKHOUND, ANONYMZN3, PAINE],
            "digital robin hood": [ALPHA7, HACKHOUND],
            "hacking services": [HANSA, RENT, VALHALLA],
            "link:hackhound.org": [TORCHAN, INTEL],
        },
    },
    "grams": {
        "endpoint": "http://grams.fixture.onion/results?search={query}",
        "backlink_query": "links-to:{domain}",
        "result_path": "response.items[].link",
        "wrap": lambda urls: {"response": {"count": len(urls), "items": [{"link": u} for u in urls]}},
        "answers": {
            "freedom fighters": [ANONYMZN3, ALPHA7],
            "hacking services": [OASIS, HANSA],
            "personal army": [RENT],
            "links-to:hackhound.org": [INTEL],
        },
    },
    "ahmia": {
        "endpoint": "http://ahmia.fixture.onion/search/?q={query}",
        "backlink_query": "{domain}",
        "result_path": "[]",
        "wrap": lambda urls: urls,
        "answers": {
            "freedom fighters": [PAINE, HACKHOUND],
            "free world": [PAINE, ANONYMZN3],
            "internet of things": [HACKHOUND, TORCHAN],
        },
    },
}


def search():
    from urllib.parse import quote_plus

    entries = []
    for name, p in PROVIDERS.items():
        write(
            f"search/providers/{name}.toml",
            f'name = "{name}"\nendpoint = "{p["endpoint"]}"\n'
            f'backlink_query = "{p["backlink_query"]}"\nresult_path = "{p["result_path"]}"\n',
        )
        for i, (query, urls) in enumerate(sorted(p["answers"].items())):
            file = f"responses/{name}-{i + 1}.json"
            write_json(f"search/{file}", p["wrap"](urls))
            entries.append(
                {"url": p["endpoint"].replace("{query}", quote_plus(query)), "file": file,
                 "content_type": "application/json"}
            )
    write_json("search/index.json", {"pages": entries})


# ----------------------------------------------------------------- seeds

THREAT_SEEDS = [
    "botnet rental with bulletproof hosting and exploit kit bundles",
    "mirai loader spreads over telnet to routers and cameras",
    "hacker for hire accepts bitcoin, account takeover guaranteed",
    "ddos service subscription, boot anyone offline",
    "selling stolen identities and fresh combo lists",
    "ransomware affiliate program recruiting operators",
    "escrow marketplace for exploit kit and crypter sales",
    "webcam shells and smart home access sold per device",
    "carding tutorials and dumps with track data",
    "personal army for raids, payment upfront",
]

BENIGN_SEEDS = [
    "patch tuesday summary and mitigation guidance for administrators",
    "volunteer study group for certification exams",
    "responsible disclosure policy and bug bounty scope",
    "hardening guide for home routers and firmware updates",
    "incident response tabletop exercise write up",
    "conference talk recordings on defensive detection engineering",
    "beginner questions about firewall rules and logging",
    "academic paper club on intrusion detection datasets",
    "password manager comparison for small offices",
    "career advice for analysts entering blue team roles",
]


def seeds():
    rows = []
    for i, text in enumerate(THREAT_SEEDS):
        rows.append({"url": f"http://seed-threat-{i + 1:02d}.fixture.onion/", "text": text, "label": "relevant"})
    for i, text in enumerate(BENIGN_SEEDS):
        rows.append({"url": f"http://seed-benign-{i + 1:02d}.fixture.example/", "text": text, "label": "irrelevant"})
    write_jsonl("seeds/labeled.jsonl", rows)


def main():
    write_jsonl("forums/shares.jsonl", share_posts())
    write_jsonl("forums/searches.jsonl", search_posts())
    write_json("forums/search_queries.json", SEARCH_QUERIES)
    scan()
    crawl_site()
    corpus()
    search()
    seeds()


if __name__ == "__main__":
    main()
