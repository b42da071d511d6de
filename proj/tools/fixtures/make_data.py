#!/usr/bin/env python3
"""Regenerates the keyword lexicon, news handle list and test fixtures.

Output is deterministic; rerun after editing the vocabularies below.
Usage: python3 tools/fixtures/make_data.py [data_dir]
"""
import csv
import random
import sys
from pathlib import Path

TARGET = {"lifestyle": 200, "entertainment": 820, "sports": 743}

NFL = """cardinals falcons ravens bills panthers bears bengals browns cowboys broncos lions
packers texans colts jaguars chiefs raiders chargers rams dolphins vikings patriots saints
giants jets eagles steelers niners seahawks buccaneers titans commanders""".split()
NBA = """hawks celtics nets hornets bulls cavaliers mavericks nuggets pistons warriors rockets
pacers clippers lakers grizzlies heat bucks timberwolves pelicans knicks thunder magic sixers
suns blazers kings spurs raptors jazz wizards""".split()
MLB = """diamondbacks braves orioles redsox cubs whitesox reds guardians rockies tigers astros
royals angels dodgers marlins brewers twins mets yankees athletics phillies pirates padres
mariners cardinalsbaseball rays rangers bluejays nationals""".split()
NHL = """ducks coyotes bruins sabres flames hurricanes blackhawks avalanche bluejackets stars
redwings oilers panthershockey kraken wild canadiens predators devils islanders rangershockey
senators flyers penguins sharks blues lightning mapleleafs canucks goldenknights capitals
jets52 kingshockey""".split()
SPORTS_TERMS = """nba nfl mlb nhl mls ncaa wnba ufc nascar pga fifa espn touchdown quarterback
halftime playoffs playoff overtime superbowl worldseries stanleycup marchmadness finalfour
homerun pitcher strikeout dunk buzzerbeater slamdunk freethrow rebound hattrick powerplay
goalie penalty fieldgoal interception fumble sack linebacker receiver wideout tightend
runningback draftday tradedeadline freeagency mvp allstar rookie coach roster preseason
standings wildcard bracket tailgate gameday kickoff redzone hailmary grandslam bullpen
shortstop outfield infield batting inning doubleheader walkoff nohitter perfectgame
boxing wrestling wrestlemania tennis wimbledon usopen golf masters pga marathon triathlon
sprinter olympics paralympics gymnastics swimming cycling tourdefrance formula1 f1 indycar
daytona motogp skiing snowboarding surfing skateboarding lacrosse rugby cricket volleyball
softball collegefootball cfb cbb heisman bowlgame rosebowl sugarbowl cottonbowl orangebowl
fantasyfootball fantasybaseball parlay sportsbook bettingline spread underdog""".split()
SPORTS_SUFFIX = ["nation", "fans", "win", "gameday"]
SPORTS_PREFIX = ["go"]

SHOWS = """strangerthings houseofthedragon therings ringsofpower wednesday euphoria succession
theboys yellowstone ozark bridgerton thecrown severance thebear abbottelementary
onlymurders ted lasso tedlasso theoffice friends seinfeld greysanatomy grays bachelor
bachelorette bachelornation loveisland survivor bigbrother thevoice americanidol
dancingwiththestars dwts snl jeopardy wheeloffortune gameofthrones got walkingdead twd
betterCallSaul breakingbad mandalorian andor obiwan bookofbobafett lokiseries wandavision
moonknight shehulk hawkeye ms marvel msmarvel peacemaker sandman cobrakai outerbanks
squidgame moneyheist vampirediaries originals riverdale supernatural doctorwho sherlock
downtonabbey peakyblinders thewitcher witcher rickandmorty simpsons familyguy southpark
bobsburgers futurama archer bojack arcane hotd acotar""".split()
MOVIES = """avatar topgun topgunmaverick blackadam blackpanther wakandaforever thorloveandthunder
dontworrydarling nope barbarian smile halloweenends hocuspocus hocuspocus2 pinocchio
elvis minions lightyear jurassicworld batman thebatman dune everythingeverywhere
oscars emmys grammys goldenglobes vmas amas metgala tribeca sundance cannes tiff
boxoffice trailer premiere sequel prequel remake spinoff reboot director screenplay
blockbuster netflix hulu disneyplus hbomax hbo primevideo peacock paramountplus appletv
crunchyroll anime manga marvel mcu dccomics dceu starwars pixar dreamworks a24
spiderman ironman avengers xmen deadpool wolverine shangchi eternals doctorstrange
multiverse johnwick fastandfurious missionimpossible jamesbond bond007 indianajones
harrypotter hogwarts lordoftherings hobbit matrix terminator alien predator godzilla
kingkong transformers ghostbusters scream halloween""".split()
MUSIC = """taylorswift swifties midnights beyonce beyhive renaissance harrystyles drake
badbunny kendrick kendricklamar rihanna adele billieeilish oliviarodrigo lizzo sza
dojacat megan theestallion travisscott kanye ye jayz eminem postmalone weeknd bts army
blackpink blinks kpop straykids twice newjeans seventeen txt enhypen ateez itzy
coldplay edsheeran brunomars dualipa arianagrande selenagomez justinbieber shawnmendes
lanadelrey lorde ladygaga littlemonsters nickiminaj barbz cardib lilnasx jackharlow
morganwallen lukecombs carrieunderwood dollyparton shania metallica foofighters
redhotchilipeppers greenday blink182 paramore fallout boy falloutboy mcr
mychemicalromance arcticmonkeys tameimpala glassanimals rosalia karolg shakira
jbalvin maluma anitta coachella lollapalooza bonnaroo acl edc grammy billboard
spotify playlist album mixtape tour setlist encore concert""".split()
CELEBS = """zendaya timotheechalamet tomholland florencepugh pedropascal anyataylorjoy
jennaortega margotrobbie ryangosling leonardodicaprio bradpitt angelinajolie
jenniferlawrence jenniferaniston jenniferlopez benaffleck mattdamon keanureeves
chrishemsworth chrisevans chrispratt scarlettjohansson robertdowneyjr tomcruise
dwaynejohnson therock kevinhart willsmith jadapinkett oprah ellen kimkardashian
kardashians kyliejenner kendalljenner khloe kourtney travisbarker petedavidson
selena haileybieber gigihadid bellahadid emrata lilireinhart colesprouse
milliebobbybrown noahschnapp finnwolfhard sadiesink gatenmatarazzo calebmclaughlin
josephquinn eddiemunson stevieharrington emmadarcy mattsmith oliviacooke
paddyconsidine rhaenyra alicent daemon viserys""".split()
ENT_SUFFIX = ["fans", "tv", "finale", "premiere"]

LIFESTYLE = """fashion ootd outfit streetwear sneakers sneakerhead skincare makeup beauty
haircare nails manicure selfcare wellness mindfulness meditation yoga pilates workout
gym fitness fitfam gains cardio hiit crossfit running keto vegan vegetarian glutenfree
mealprep recipe recipes baking foodie brunch coffee latte matcha smoothie wine
cocktails mixology travel wanderlust vacation roadtrip camping hiking backpacking
interiordesign homedecor diy crafts gardening plants houseplants succulents
minimalism decluttering organization thrifting vintage sustainable zerowaste
parenting momlife dadlife pets dogsofinstagram catsofinstagram puppy kitten
wedding bridal engagement relationships dating selflove motivation productivity
journaling bookstagram booktok reading bookclub podcast astrology horoscope tarot
candles aromatherapy spa sephora ulta glossier fenty rarebeauty elfcosmetics
lululemon athleisure nike adidas newbalance converse vans zara hm shein aritzia
skims targetfinds costco traderjoes wholefoods airfryer instantpot sourdough
charcuterie pumpkinspice fallfashion fallvibes cozy hygge""".split()
LIFESTYLE_SUFFIX = ["tips", "inspo"]

POLITICAL = """senate senator vote voting voter election elections debate polls poll congress
governor law midterm midterms turnout president inflation supreme court ruling republicans
republican democrats democrat gop bill legislation campaign ballot impeachment abortion
immigration border tax taxes policy politics political liberal conservative""".split()


def unique_tokens(words):
    out = []
    seen = set()
    for w in words:
        w = w.strip().lower()
        if not w or not w.isalnum() or w in seen:
            continue
        seen.add(w)
        out.append(w)
    return out


def build_topic(base, suffixes, prefixes, target, taken, rng):
    base = [w for w in unique_tokens(base) if w not in taken]
    chosen = list(base)
    combos = []
    for w in base:
        for s in suffixes:
            combos.append(w + s)
        for p in prefixes:
            combos.append(p + w)
    rng.shuffle(combos)
    for c in combos:
        if len(chosen) >= target:
            break
        if c not in taken and c not in chosen:
            chosen.append(c)
    if len(chosen) < target:
        raise SystemExit(f"not enough vocabulary: {len(chosen)} < {target}")
    return chosen[:target]


def write_lexicon(data):
    rng = random.Random(20220901)
    taken = set(POLITICAL)
    topics = {}
    for topic, base, suffixes, prefixes in [
        ("sports", NFL + NBA + MLB + NHL + SPORTS_TERMS, SPORTS_SUFFIX, SPORTS_PREFIX),
        ("entertainment", SHOWS + MOVIES + MUSIC + CELEBS, ENT_SUFFIX, []),
        ("lifestyle", LIFESTYLE, LIFESTYLE_SUFFIX, []),
    ]:
        words = build_topic(base, suffixes, prefixes, TARGET[topic], taken, rng)
        taken.update(words)
        topics[topic] = words
    with open(data / "keywords.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["keyword", "topic"])
        for topic in ("sports", "entertainment", "lifestyle"):
            for kw in sorted(topics[topic]):
                w.writerow([kw, topic])


def write_news_handles(data):
    rng = random.Random(5341)
    names = """nytimes washingtonpost wsj usatoday latimes chicagotribune bostonglobe
    nypost newsday sfchronicle seattletimes denverpost startribune ajc miamiherald
    tampabaytimes dallasnews houstonchron azcentral oregonian philly baltimoresun
    cnn foxnews msnbc nbcnews abc cbsnews npr pbs ap reuters bloomberg axios politico
    thehill vox vice buzzfeednews huffpost slate theatlantic newyorker time newsweek
    forbes businessinsider cnbc marketwatch espn bleacherreport theathletic si
    variety hollywoodreporter deadline rollingstone billboard people eonline tmz
    vanityfair vogue elle cosmopolitan glamour gq esquire wired techcrunch verge""".split()
    rows = []
    ids = set()
    for i in range(300):
        base = names[i % len(names)]
        handle = "@" + base + ("" if i < len(names) else f"_{i // len(names)}")
        while True:
            mid = "m" + str(rng.randrange(10**9, 10**10))
            if mid not in ids:
                ids.add(mid)
                break
        rows.append([base.title() if i < len(names) else f"{base.title()} {i // len(names)}", handle, mid])
    with open(data / "news_handles.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["name", "handle", "media_user_id"])
        w.writerows(rows)


def write_annotations(fixtures):
    # 500 responses x 5 annotators. Row patterns are varied but the majority
    # tally is fixed at 407 satisfactory / 93 unsatisfactory.
    rng = random.Random(407)
    rows = []
    for i in range(500):
        sat = i < 407
        yes = rng.choice([3, 4, 5]) if sat else rng.choice([0, 1, 2])
        cells = ["satisfactory"] * yes + ["unsatisfactory"] * (5 - yes)
        rng.shuffle(cells)
        rows.append(cells)
    rng.shuffle(rows)
    with open(fixtures / "annotations.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["response_id", "a1", "a2", "a3", "a4", "a5"])
        for i, cells in enumerate(rows):
            w.writerow([f"r{i + 1:03d}"] + cells)


def write_sentiment(fixtures):
    rng = random.Random(241)
    labels = ([("male", "positive")] * 18 + [("male", "negative")] * 49 +
              [("male", "neutral")] * 32 + [("female", "positive")] * 21 +
              [("female", "negative")] * 65 + [("female", "neutral")] * 56)
    rng.shuffle(labels)
    with open(fixtures / "sentiment_labels.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["bot_gender", "sentiment"])
        w.writerows(labels)


def write_gate_fixture(fixtures):
    # 50 echoes, 50 profanity, 50 platform-term, 50 clean drafts.
    rng = random.Random(200)
    inputs = [
        "the lakers looked unstoppable in the fourth quarter tonight",
        "just finished the new season of stranger things and wow",
        "trying a new sourdough recipe this weekend",
        "cannot believe the yankees blew that lead again",
        "the oscars red carpet looks were incredible this year",
        "my skincare routine finally started working",
        "who else stayed up for the playoff game",
        "taylor swift announced a new album and I am screaming",
        "meal prep sunday is the only way I survive the week",
        "that touchdown in overtime was unreal",
    ]
    clean = [
        "Sounds like a game worth remembering.",
        "That season sounds like quite a ride.",
        "Good luck with the bake, share how it turns out.",
        "Tough loss, there is always next week.",
        "Some of those looks were really bold choices.",
        "Glad something finally clicked for you.",
        "Late nights like that are part of being a fan.",
        "Big news, a lot of people will be excited.",
        "Planning ahead really does save the week.",
        "Moments like that are why people watch.",
    ]
    profane = ["damn", "shit", "hell", "crap", "bastard", "ass", "piss", "dick", "bitch", "fuck"]
    platform = ["upvote", "downvote", "subreddit", "reddit", "karma", "redditor", "op", "tldr",
                "crosspost", "upvoted"]
    rows = []
    for i in range(50):
        src = inputs[i % len(inputs)]
        words = src.split()
        j = rng.randrange(len(words))
        echo = " ".join(words[:j] + words[j + 1:]) if i % 2 else src
        rows.append([f"echo{i:02d}", src, echo, "echo"])
    for i in range(50):
        src = inputs[i % len(inputs)]
        base = clean[i % len(clean)].rstrip(".")
        rows.append([f"prof{i:02d}", src, f"{base}, {profane[i % len(profane)]}.", "profanity"])
    for i in range(50):
        src = inputs[i % len(inputs)]
        base = clean[(i + 3) % len(clean)].rstrip(".")
        term = platform[i % len(platform)]
        rows.append([f"plat{i:02d}", src, f"{base}, {term} this.", "platform_terms"])
    for i in range(50):
        src = inputs[i % len(inputs)]
        rows.append([f"clean{i:02d}", src, clean[(i * 7) % len(clean)], "clean"])
    with open(fixtures / "gate_drafts.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["draft_id", "input", "draft", "planted"])
        w.writerows(rows)


def main():
    data = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parents[2] / "data"
    fixtures = data / "fixtures"
    fixtures.mkdir(parents=True, exist_ok=True)
    write_lexicon(data)
    write_news_handles(data)
    write_annotations(fixtures)
    write_sentiment(fixtures)
    write_gate_fixture(fixtures)
    (data / "political_terms.txt").write_text(
        "# Reference political classifier vocabulary, one lowercase token per line.\n" +
        "\n".join(POLITICAL) + "\n")


if __name__ == "__main__":
    main()
