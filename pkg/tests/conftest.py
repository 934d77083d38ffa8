import io
import json

import pytest

from wigi.models import Gender, GenderKind, HumanRecord, YearValue


def claim(value_id=None, rank="normal", time=None, precision=9):
    if time is not None:
        datavalue = {"value": {"time": time, "precision": precision}, "type": "time"}
    else:
        datavalue = {"value": {"entity-type": "item", "id": value_id},
                     "type": "wikibase-entityid"}
    return {"mainsnak": {"snaktype": "value", "datavalue": datavalue}, "rank": rank}


def make_human(qid, gender=None, birth=None, death=None, pob=None,
               citizenships=(), ethnic_groups=(), sitelinks=(), extra_claims=None):
    claims = {"P31": [claim("Q5")]}
    if gender is not None:
        claims["P21"] = gender if isinstance(gender, list) else [claim(gender)]
    if birth is not None:
        claims["P569"] = [claim(time=birth[0], precision=birth[1])] \
            if isinstance(birth, tuple) else [claim(time=birth)]
    if death is not None:
        claims["P570"] = [claim(time=death[0], precision=death[1])] \
            if isinstance(death, tuple) else [claim(time=death)]
    if pob is not None:
        claims["P19"] = [claim(pob)]
    if citizenships:
        claims["P27"] = [claim(c) for c in citizenships]
    if ethnic_groups:
        claims["P172"] = [claim(e) for e in ethnic_groups]
    if extra_claims:
        claims.update(extra_claims)
    return {
        "type": "item",
        "id": qid,
        "claims": claims,
        "sitelinks": {code: {"site": code, "title": f"T{qid}"} for code in sitelinks},
    }


def make_country(qid):
    return {"type": "item", "id": qid, "claims": {"P31": [claim("Q6256")]},
            "sitelinks": {}}


def make_city(qid, country):
    return {"type": "item", "id": qid,
            "claims": {"P31": [claim("Q515")], "P17": [claim(country)]},
            "sitelinks": {}}


def dump_bytes(entities, array_wrapped=False):
    lines = [json.dumps(e, ensure_ascii=False) for e in entities]
    if array_wrapped:
        body = "[\n" + ",\n".join(lines) + "\n]\n"
    else:
        body = "\n".join(lines) + "\n"
    return body.encode("utf-8")


def dump_stream(entities, array_wrapped=False):
    return io.BytesIO(dump_bytes(entities, array_wrapped))


GENDER_QIDS = {"male": "Q6581097", "female": "Q6581072"}


def rec(qid, gender="male", birth=None, death=None, country=None,
        citizenships=(), ethnic_groups=(), sitelinks=(), pob=None):
    """Shorthand HumanRecord constructor for indicator tests."""
    if isinstance(gender, str):
        gender = Gender(GenderKind(gender)) if ":" not in gender \
            else Gender.from_token(gender)
    return HumanRecord(
        id=qid,
        gender=gender,
        birth=YearValue(birth) if isinstance(birth, int) else birth,
        death=YearValue(death) if isinstance(death, int) else death,
        place_of_birth=pob,
        citizenships=frozenset(citizenships),
        ethnic_groups=frozenset(ethnic_groups),
        country=country,
        sitelinks=frozenset(sitelinks),
    )


@pytest.fixture
def atlas(tmp_path):
    from wigi.culture import load_atlas

    entity_map = tmp_path / "entities.tsv"
    entity_map.write_text(
        "Q30\tEnglishSpeaking\n"
        "Q183\tProtestantEurope\n"
        "Q148\tConfucian\n"
        "Q17\tConfucian\n"
        "Q794\tIslamic\n"
        "Q159\tOrthodox\n"
        "Q928\tSouthAsian\n",
        encoding="utf-8",
    )
    language_map = tmp_path / "languages.tsv"
    language_map.write_text(
        "enwiki\tEnglishSpeaking\n"
        "dewiki\tProtestantEurope\n"
        "zhwiki\tConfucian\n"
        "jawiki\tConfucian\n"
        "tlwiki\tSouthAsian\n"
        "eowiki\tConstructed\n",
        encoding="utf-8",
    )
    return load_atlas(entity_map, language_map)
