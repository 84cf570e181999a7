#!/usr/bin/env python3
"""Regenerates the bundled fixture set.

Everything is derived from a fixed RNG seed, so reruns are byte-identical.
The script also recomputes the expected harvest/tagging/labeling numbers with
its own independent implementation of the matching rules and freezes them in
fixtures/manifest.json. Values produced by the seeded C++ stages (topic model
top words, histogram counts) are kept from the existing manifest when present;
they are frozen separately from a verified run.
"""

import csv
import io
import json
import random
import re
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
FIX = ROOT / "fixtures"

rng = random.Random(20240917)

# ---------------------------------------------------------------------------
# Text normalization mirror (same rules as the pipeline: Latin fold,
# punctuation to spaces, collapsed whitespace).

def fold_char(cp: int) -> int:
    if 0x41 <= cp <= 0x5A:
        return cp + 0x20
    if 0xC0 <= cp <= 0xDE and cp != 0xD7:
        return cp + 0x20
    if 0x100 <= cp <= 0x137 and cp % 2 == 0 and cp != 0x130:
        return cp + 1
    if 0x139 <= cp <= 0x147 and cp % 2 == 1:
        return cp + 1
    if 0x14A <= cp <= 0x177 and cp % 2 == 0:
        return cp + 1
    if cp == 0x178:
        return 0xFF
    if 0x179 <= cp <= 0x17D and cp % 2 == 1:
        return cp + 1
    if cp == 0x17F:
        return 0x73
    if cp == 0x1E9E:
        return 0xDF
    return cp


def is_separator(cp: int) -> bool:
    if cp < 0x80:
        c = chr(cp)
        return not (c.isascii() and c.isalnum())
    if 0x80 <= cp <= 0xBF:
        return True
    if cp in (0xD7, 0xF7):
        return True
    if 0x2000 <= cp <= 0x206F:
        return True
    return False


def normalize(text: str) -> str:
    out = []
    pending = False
    for ch in text:
        cp = fold_char(ord(ch))
        if is_separator(cp):
            pending = True
            continue
        if pending and out:
            out.append(" ")
        pending = False
        out.append(chr(cp))
    return "".join(out)


def tokens_of(text: str) -> list[str]:
    n = normalize(text)
    return n.split(" ") if n else []


def contains_phrase(token_list: list[str], phrase_tokens: list[str]) -> bool:
    width = len(phrase_tokens)
    return any(token_list[i:i + width] == phrase_tokens for i in range(len(token_list) - width + 1))


# ---------------------------------------------------------------------------
# SDG 13 sample vocabulary.

TERMS = {
    "climate_change": ["climate change", "climatic change", "changing climate", "climate changes"],
    "global_warming": ["global warming", "warming climate", "planetary warming"],
    "global_heating": ["global heating"],
    "greenhouse_gas": ["greenhouse gas", "greenhouse gases", "greenhouse gas emissions", "ghg emissions"],
    "carbon_emission": ["carbon emission", "carbon emissions", "co2 emission", "co2 emissions", "carbon dioxide emissions"],
    "methane_emission": ["methane emission", "methane emissions"],
    "emission": ["emission", "emissions"],
    "emission_reduction": ["emission reduction", "emissions reduction", "reduction of emissions"],
    "decarbonization": ["decarbonization", "decarbonisation", "deep decarbonization"],
    "carbon_neutrality": ["carbon neutral", "carbon neutrality", "climate neutral", "climate neutrality"],
    "carbon_footprint": ["carbon footprint", "carbon footprints"],
    "carbon_capture": ["carbon capture", "carbon capture and storage", "carbon sequestration"],
    "carbon_sink": ["carbon sink", "carbon sinks", "carbon uptake"],
    "carbon_price": ["carbon pricing", "carbon tax", "carbon market", "emissions trading"],
    "carbon_accounting": ["carbon accounting", "ghg inventory", "greenhouse gas inventory"],
    "climate_policy": ["climate policy", "climate policies", "climate legislation"],
    "climate_action": ["climate action", "climate actions"],
    "climate_mitigation": ["climate mitigation", "climate change mitigation", "mitigation of climate change"],
    "climate_adaptation": ["climate adaptation", "climate change adaptation", "adaptation to climate change"],
    "climate_resilience": ["climate resilience", "climate resilient", "climate proofing"],
    "climate_risk": ["climate risk", "climate risks"],
    "climate_model": ["climate model", "climate models", "climate modelling", "climate modeling", "climate simulation"],
    "climate_scenario": ["climate scenario", "climate scenarios", "emission scenario", "emission scenarios"],
    "climate_variability": ["climate variability", "climatic variability"],
    "climate_sensitivity": ["climate sensitivity"],
    "climate_feedback": ["climate feedback", "climate feedbacks"],
    "climate_finance": ["climate finance", "green bonds", "climate investment"],
    "climate_justice": ["climate justice"],
    "climate_education": ["climate education", "climate literacy"],
    "climate_communication": ["climate communication"],
    "climate_services": ["climate services"],
    "paris_agreement": ["paris agreement", "paris accord"],
    "ipcc": ["ipcc", "intergovernmental panel on climate change"],
    "kyoto_protocol": ["kyoto protocol"],
    "sea_level_rise": ["sea level rise", "rising sea level", "rising sea levels", "sea level change"],
    "ocean_acidification": ["ocean acidification", "acidification of the ocean"],
    "ocean_warming": ["ocean warming", "warming ocean", "marine heatwave", "marine heatwaves"],
    "sea_ice_loss": ["sea ice decline", "sea ice loss", "shrinking sea ice"],
    "glacier_retreat": ["glacier retreat", "glacial retreat", "melting glaciers", "ice sheet loss"],
    "permafrost_thaw": ["permafrost thaw", "thawing permafrost", "permafrost degradation"],
    "extreme_weather": ["extreme weather", "extreme weather events", "weather extremes"],
    "heat_wave": ["heat wave", "heat waves", "heatwave", "heatwaves"],
    "drought": ["drought", "droughts", "drought risk"],
    "flood_risk": ["flood risk", "flooding risk", "coastal flooding", "storm surge"],
    "wildfire": ["wildfire", "wildfires", "forest fire", "forest fires"],
    "renewable_energy": ["renewable energy", "renewables", "clean energy", "green energy"],
    "wind_energy": ["wind energy", "wind power", "offshore wind", "wind farm", "wind farms"],
    "solar_energy": ["solar energy", "solar power", "photovoltaic", "photovoltaics", "solar panels"],
    "bioenergy": ["bioenergy", "biofuel", "biofuels", "biogas", "biomass energy"],
    "hydrogen_energy": ["green hydrogen", "hydrogen economy", "power to x"],
    "energy_transition": ["energy transition", "green transition", "low carbon transition"],
    "energy_efficiency": ["energy efficiency", "energy efficient", "energy savings"],
    "fossil_fuel": ["fossil fuel", "fossil fuels", "coal fired", "fossil energy"],
    "fossil_phase_out": ["coal phase out", "fossil fuel phase out"],
    "electrification": ["electrification", "electric vehicles", "electric vehicle"],
    "district_heating": ["district heating"],
    "low_carbon": ["low carbon", "low emission", "zero emission", "net zero"],
    "sustainable_transport": ["sustainable transport", "sustainable mobility", "modal shift"],
    "climate": ["climate"],
    "organizational_climate": ["organizational climate", "organisational climate", "work climate"],
    "investment_climate": ["investment climate", "business climate"],
    "political_climate": ["political climate"],
}

SINGLE_TRIGGERS = [
    "climate_change", "global_warming", "global_heating", "greenhouse_gas", "carbon_emission",
    "methane_emission", "emission_reduction", "decarbonization", "carbon_neutrality",
    "carbon_footprint", "carbon_capture", "carbon_price", "climate_policy", "climate_action",
    "climate_mitigation", "climate_adaptation", "climate_resilience", "climate_model",
    "paris_agreement", "kyoto_protocol", "sea_level_rise", "ocean_acidification",
    "permafrost_thaw", "glacier_retreat", "sea_ice_loss", "climate_finance", "climate_justice",
    "climate_education",
]

RULES = [{"rule_id": f"r_{t}", "all_of": [t], "any_of": [], "none_of": []} for t in SINGLE_TRIGGERS]
RULES += [
    {"rule_id": "r_climate_context", "all_of": ["climate"], "any_of": [],
     "none_of": ["organizational_climate", "investment_climate", "political_climate"]},
    {"rule_id": "r_renewables_context", "all_of": ["renewable_energy"],
     "any_of": ["climate", "emission", "fossil_fuel", "energy_transition", "low_carbon"], "none_of": []},
    {"rule_id": "r_wind_context", "all_of": ["wind_energy"],
     "any_of": ["climate", "emission", "low_carbon", "energy_transition"], "none_of": []},
    {"rule_id": "r_solar_context", "all_of": ["solar_energy"],
     "any_of": ["climate", "emission", "low_carbon", "energy_transition"], "none_of": []},
    {"rule_id": "r_bioenergy_context", "all_of": ["bioenergy"],
     "any_of": ["emission", "low_carbon", "fossil_fuel", "climate"], "none_of": []},
    {"rule_id": "r_hydrogen_context", "all_of": ["hydrogen_energy"],
     "any_of": ["emission", "low_carbon", "climate", "fossil_fuel"], "none_of": []},
    {"rule_id": "r_efficiency_context", "all_of": ["energy_efficiency"],
     "any_of": ["emission", "low_carbon", "climate"], "none_of": []},
    {"rule_id": "r_heating_context", "all_of": ["district_heating"],
     "any_of": ["emission", "low_carbon", "climate", "fossil_phase_out"], "none_of": []},
    {"rule_id": "r_transport_context", "all_of": ["sustainable_transport"],
     "any_of": ["emission", "low_carbon", "climate", "electrification"], "none_of": []},
    {"rule_id": "r_emission_context", "all_of": ["emission"],
     "any_of": ["low_carbon", "carbon_price", "fossil_phase_out", "electrification", "carbon_accounting"],
     "none_of": []},
    {"rule_id": "r_extreme_weather_context", "all_of": ["extreme_weather"], "any_of": ["climate"],
     "none_of": []},
    {"rule_id": "r_drought_context", "all_of": ["drought"], "any_of": ["climate", "global_warming"],
     "none_of": []},
    {"rule_id": "r_flood_context", "all_of": ["flood_risk"], "any_of": ["climate", "sea_level_rise"],
     "none_of": []},
    {"rule_id": "r_heatwave_context", "all_of": ["heat_wave"], "any_of": ["climate", "ocean_warming"],
     "none_of": []},
    {"rule_id": "r_wildfire_context", "all_of": ["wildfire"], "any_of": ["climate", "drought"],
     "none_of": []},
    {"rule_id": "r_sink_context", "all_of": ["carbon_sink"],
     "any_of": ["climate", "emission", "carbon_accounting"], "none_of": []},
]

# ---------------------------------------------------------------------------
# ERC panel seed lexicons (disjoint surface forms).

SEEDS = {
    "PE1": ["number theory", "algebraic geometry", "partial differential equations", "stochastic processes", "topological invariants"],
    "PE2": ["particle physics", "quantum field theory", "neutrino oscillations", "hadron collider", "dark matter searches"],
    "PE3": ["condensed matter", "superconductivity", "topological insulator", "spintronics", "phonon transport"],
    "PE4": ["atmospheric chemistry", "aerosol particles", "mass spectrometry", "spectroscopic analysis", "reaction kinetics", "trace gas measurements"],
    "PE5": ["polymer synthesis", "catalytic materials", "organic synthesis", "nanostructured materials", "membrane materials"],
    "PE6": ["machine learning", "high performance computing", "neural networks", "scalable algorithms", "data assimilation"],
    "PE7": ["control systems", "signal processing", "wireless networks", "power electronics", "sensor networks"],
    "PE8": ["wind turbine", "turbine blades", "offshore foundations", "grid integration", "thermal storage", "district energy"],
    "PE9": ["exoplanet", "galaxy formation", "stellar evolution", "cosmic microwave background", "gravitational waves"],
    "PE10": ["paleoclimate", "sedimentology", "ocean circulation", "ice cores", "earth system", "geophysical survey"],
    "LS1": ["protein folding", "dna repair", "rna splicing", "enzyme mechanisms", "structural biology"],
    "LS2": ["genome sequencing", "gene expression", "transcriptomics", "population genetics", "epigenetics"],
    "LS3": ["cell differentiation", "stem cells", "embryonic development", "cell signalling", "organoid models"],
    "LS4": ["metabolic regulation", "endocrine signalling", "cardiovascular function", "glucose homeostasis", "muscle physiology"],
    "LS5": ["neural circuits", "synaptic plasticity", "cognitive function", "brain imaging", "neurodegeneration"],
    "LS6": ["antibody response", "viral infection", "vaccine development", "antimicrobial resistance", "host pathogen interactions"],
    "LS7": ["clinical trial", "randomized controlled", "patient outcomes", "diagnostic imaging", "biomarker discovery"],
    "LS8": ["ecosystem dynamics", "species richness", "habitat fragmentation", "population dynamics", "food web", "benthic communities"],
    "LS9": ["microbial fermentation", "enzymatic conversion", "bioreactor design", "metabolic engineering", "industrial biotechnology"],
    "SH1": ["market regulation", "economic incentives", "cost benefit analysis", "labour markets", "econometric analysis"],
    "SH2": ["public opinion", "political participation", "social movements", "welfare state", "survey experiments"],
    "SH3": ["environmental governance", "urban planning", "land use change", "spatial planning", "municipal adaptation"],
    "SH4": ["language acquisition", "cognitive psychology", "linguistic diversity", "perception experiments", "educational psychology"],
    "SH5": ["literary history", "museum collections", "art history", "cultural heritage", "performing arts"],
    "SH6": ["archaeological excavation", "medieval manuscripts", "historical archives", "iron age", "settlement patterns"],
}

# ---------------------------------------------------------------------------
# Synthetic record content. Each theme carries a word pool, the vocabulary
# phrases that make a record SDG-13 positive, and the panel whose seeds are
# planted for weak labeling.

FILLER = [
    "we present", "this study examines", "results indicate that", "we analyse",
    "the project develops", "our findings suggest", "we quantify", "the consortium investigates",
    "field data show", "the analysis combines", "we report", "long term observations reveal",
]

THEMES = {
    "energy": {
        "panel": "PE8",
        "pool": "turbine rotor electricity grid capacity installation nacelle converter voltage balancing curtailment substation maintenance levelised generation hub blade North Sea Kattegat array".split(),
        "sdg": [["offshore wind", "low carbon"], ["wind power", "energy transition"],
                ["wind farms", "emissions"], ["renewable energy", "fossil fuels"],
                ["wind energy", "net zero"]],
        "seeds": [["wind turbine", "grid integration"], ["turbine blades", "offshore foundations"],
                  ["wind turbine", "thermal storage", "grid integration"]],
    },
    "emissions": {
        "panel": "PE4",
        "pool": "particulate nitrogen oxides flux chamber plume urban monitoring station sampling inventory combustion stack dispersion concentration ambient measurement campaign".split(),
        "sdg": [["carbon emissions", "emissions trading"], ["greenhouse gas emissions"],
                ["methane emissions"], ["co2 emissions", "carbon accounting"],
                ["emission", "low emission", "carbon pricing"]],
        "seeds": [["atmospheric chemistry", "aerosol particles"],
                  ["trace gas measurements", "mass spectrometry"],
                  ["aerosol particles", "reaction kinetics"]],
    },
    "biosphere": {
        "panel": "LS8",
        "pool": "vegetation soil grassland forest canopy seedling phenology pollinator earthworm microbial biomass breeding migration nutrient moth grazing heathland".split(),
        "sdg": [["climate change"], ["warming climate"], ["changing climate", "drought"],
                ["climate change", "extreme weather"], ["global warming"]],
        "seeds": [["ecosystem dynamics", "species richness"], ["habitat fragmentation", "food web"],
                  ["population dynamics", "benthic communities"]],
    },
    "policy": {
        "panel": "SH3",
        "pool": "stakeholder municipality governance planning citizens participation workshop indicator scenario roadmap directive compliance literacy awareness curriculum teaching".split(),
        "sdg": [["climate policy"], ["climate adaptation", "climate resilience"],
                ["climate action", "paris agreement"], ["climate education"],
                ["climate legislation", "climate justice"]],
        "seeds": [["environmental governance", "municipal adaptation"],
                  ["urban planning", "land use change"], ["spatial planning", "municipal adaptation"]],
    },
    "fuels": {
        "panel": "LS9",
        "pool": "feedstock straw manure digestion residue lignin pretreatment yeast substrate refinery upgrading catalyst reactor slurry harvest".split(),
        "sdg": [["biogas", "fossil fuels"], ["biofuels", "low carbon"],
                ["biomass energy", "emissions"], ["bioenergy", "green transition"],
                ["green hydrogen", "zero emission"]],
        "seeds": [["microbial fermentation", "enzymatic conversion"],
                  ["bioreactor design", "metabolic engineering"],
                  ["microbial fermentation", "industrial biotechnology"]],
    },
    "oceans": {
        "panel": "PE10",
        "pool": "fjord salinity stratification moorings plankton buoy bathymetry sediment proxy drilling foraminifera isotope reconstruction Baltic Greenland shelf".split(),
        "sdg": [["sea level rise"], ["ocean acidification"], ["marine heatwaves"],
                ["melting glaciers", "sea ice loss"], ["thawing permafrost"]],
        "seeds": [["paleoclimate", "sedimentology"], ["ocean circulation", "ice cores"],
                  ["earth system", "geophysical survey"]],
    },
    "econ": {
        "panel": "SH1",
        "pool": "household firms prices subsidy auction tariff investment portfolio welfare elasticity demand equilibrium taxation insurance".split(),
        "sdg": [["carbon tax"], ["carbon market", "emissions trading"],
                ["climate finance", "green bonds"], ["carbon pricing", "emission reduction"]],
        "seeds": [["market regulation", "economic incentives"],
                  ["cost benefit analysis", "econometric analysis"]],
    },
    "informatics": {
        "panel": "PE6",
        "pool": "simulation ensemble downscaling resolution parameterisation benchmark dataset workflow cluster throughput calibration uncertainty".split(),
        "sdg": [["climate model"], ["climate models", "climate scenarios"],
                ["climate simulation"], ["climate modelling", "climate sensitivity"]],
        "seeds": [["machine learning", "data assimilation"],
                  ["high performance computing", "scalable algorithms"],
                  ["neural networks", "data assimilation"]],
    },
    # Non-SDG themes: no vocabulary phrases planted.
    "medicine": {
        "panel": None,
        "pool": "patients cohort treatment dosing symptom hospital registry trial screening osteoporosis recovery surgery nurses implant".split(),
        "sdg": [], "seeds": [],
    },
    "quantum": {
        "panel": None,
        "pool": "qubit photon cavity coherence entanglement lattice cryostat detuning resonator waveguide semiconductor exciton".split(),
        "sdg": [], "seeds": [],
    },
    "food": {
        "panel": None,
        "pool": "dairy whey cheese starter culture texture rheology shelf life packaging sensory tasting protein oat barley".split(),
        "sdg": [], "seeds": [],
    },
    "heritage": {
        "panel": None,
        "pool": "archive manuscript exhibition curators narrative memory restoration pigment parchment chronicle folklore".split(),
        "sdg": [], "seeds": [],
    },
    "computing": {
        "panel": None,
        "pool": "compiler scheduling latency cache protocol verification concurrency runtime container orchestration telemetry".split(),
        "sdg": [], "seeds": [],
    },
}

NON_SDG_THEMES = ["medicine", "quantum", "food", "heritage", "computing"]


def make_sentence(pool, extra_phrases=()):
    words = [rng.choice(FILLER)]
    words += rng.sample(pool, k=min(len(pool), rng.randint(4, 7)))
    for phrase in extra_phrases:
        words.insert(rng.randint(1, len(words)), phrase)
    return " ".join(words) + "."


def make_text(theme_name, sdg_idx=None, seed_idx=None, extra=()):
    """Returns (title, abstract). sdg_idx/seed_idx select planted phrase sets."""
    theme = THEMES[theme_name]
    pool = theme["pool"]
    title_words = rng.sample(pool, k=min(len(pool), rng.randint(4, 6)))
    title = " ".join(title_words).capitalize()
    phrases = list(extra)
    if sdg_idx is not None:
        phrases += theme["sdg"][sdg_idx % len(theme["sdg"])]
    if seed_idx is not None:
        phrases += theme["seeds"][seed_idx % len(theme["seeds"])]
    rng.shuffle(phrases)
    sentences = []
    per_sentence = 2
    for i in range(0, max(len(phrases), 1), per_sentence):
        sentences.append(make_sentence(pool, phrases[i:i + per_sentence]))
    while len(sentences) < rng.randint(3, 5):
        sentences.append(make_sentence(pool))
    return title, " ".join(sentences)


# ---------------------------------------------------------------------------
# Record plans per source.

def plan_records(n_sdg_by_theme, n_plain_by_theme):
    """Yields (theme, sdg_idx, seed_idx, extras) tuples in a shuffled order."""
    plan = []
    for theme, specs in n_sdg_by_theme.items():
        for sdg_idx, seed_idx in specs:
            plan.append((theme, sdg_idx, seed_idx, ()))
    for theme, count in n_plain_by_theme.items():
        for _ in range(count):
            plan.append((theme, None, None, ()))
    rng.shuffle(plan)
    return plan


def years():
    return rng.randint(2014, 2019)


DK_PARTNERS = ["SE", "DE", "NO", "NL", "FI", "FR", "UK", "ES", "IT"]


def openalex_works():
    """57 works in 3 pages (25+25+7), all Danish 2014-2019."""
    sdg = {
        "energy": [(0, 0), (1, 1), (2, None)],
        "emissions": [(0, 0), (1, 1), (3, 2)],
        "biosphere": [(0, 0), (1, 1), (2, None)],
        "policy": [(0, 0), (2, 1)],
        "fuels": [(0, 0), (4, 1)],
        "oceans": [(0, 0), (1, 1), (2, 2)],
        "econ": [(0, 0), (2, 1)],
        "informatics": [(0, 0), (1, 1)],
    }
    plain = {"medicine": 7, "quantum": 7, "food": 6, "heritage": 5, "computing": 5}
    plan = plan_records(sdg, plain)
    works = []
    for i, (theme, sdg_idx, seed_idx, extras) in enumerate(plan):
        title, abstract = make_text(theme, sdg_idx, seed_idx, extras)
        work = {
            "id": f"https://openalex.org/W91{i:08d}",
            "title": title,
            "publication_year": years(),
            "authorships": [
                {"institutions": [{"country_code": "DK"}]},
            ],
        }
        if rng.random() < 0.4:
            work["authorships"].append(
                {"institutions": [{"country_code": rng.choice(DK_PARTNERS)}]})
        if rng.random() < 0.5:
            work["doi"] = f"https://doi.org/10.9{i:03d}/demo.{rng.randint(100, 999)}"
        work["abstract_inverted_index"] = invert(abstract)
        works.append(work)

    # Pinned special cases (indexes chosen past the shuffled plan):
    # a work with no abstract at all,
    works.append({
        "id": "https://openalex.org/W9200000001",
        "title": "Grid monitoring hardware for rural substations",
        "publication_year": 2017,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
    })
    # the documented doi normalization case,
    t, a = make_text("oceans", 3, None)
    works.append({
        "id": "https://openalex.org/W9200000002",
        "title": t,
        "publication_year": 2018,
        "doi": "https://doi.org/10.5555/X1",
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(a),
    })
    # an all-caps title that only case folding can tag,
    works.append({
        "id": "https://openalex.org/W9200000003",
        "title": "CLIMATE CHANGE AND COASTAL SETTLEMENTS IN THE BALTIC REGION",
        "publication_year": 2016,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(
            "We survey municipal records and shoreline positions across three decades of coastal planning work."),
    })
    # the token-boundary trap: acclimate must not read as climate,
    works.append({
        "id": "https://openalex.org/W9200000004",
        "title": "How greenhouse lettuce cultivars acclimate to shading",
        "publication_year": 2015,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(
            "Seedlings acclimated to reduced light while acclimatization periods varied between cultivars and glasshouse bays."),
    })
    # none_of traps: organizational and investment climate stay untagged,
    works.append({
        "id": "https://openalex.org/W9200000005",
        "title": "Organizational climate and nurse retention in Danish hospitals",
        "publication_year": 2019,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(
            "Survey waves link organizational climate with retention, turnover intentions and ward staffing."),
    })
    works.append({
        "id": "https://openalex.org/W9200000006",
        "title": "The investment climate for early stage hardware ventures",
        "publication_year": 2018,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(
            "Interviews with founders describe how the investment climate shapes seed rounds and exits."),
    })
    # a tie between two panels stays unlabeled (two PE10 + two LS8 seeds).
    works.append({
        "id": "https://openalex.org/W9200000007",
        "title": "Climate change signals in fjord sediment and fauna",
        "publication_year": 2017,
        "authorships": [{"institutions": [{"country_code": "DK"}]}],
        "abstract_inverted_index": invert(
            "Climate change alters deposition; paleoclimate proxies and sedimentology cores track shifts while "
            "ecosystem dynamics and species richness respond in parallel."),
    })
    assert len(works) == 57, len(works)
    return [works[:25], works[25:50], works[50:]]


def invert(abstract: str):
    index = {}
    for pos, token in enumerate(abstract.split(" ")):
        index.setdefault(token, []).append(pos)
    return index


def openaire_results():
    """84 results in 2 pages; 80 pass the DK 2014-2019 filter."""
    sdg = {
        "energy": [(3, 0), (4, 1), (0, None)],
        "emissions": [(1, 0), (2, 1), (4, 2)],
        "biosphere": [(3, 0), (4, 1), (0, 2), (1, None)],
        "policy": [(1, 0), (3, 1), (4, 2)],
        "fuels": [(1, 0), (2, 1), (3, None)],
        "oceans": [(3, 0), (4, 1), (0, 2)],
        "econ": [(1, 0), (3, 1)],
        "informatics": [(2, 0), (3, 1)],
    }
    plain = {"medicine": 13, "quantum": 11, "food": 11, "heritage": 11, "computing": 10}
    plan = plan_records(sdg, plain)
    results = []
    for i, (theme, sdg_idx, seed_idx, extras) in enumerate(plan):
        title, abstract = make_text(theme, sdg_idx, seed_idx, extras)
        day = rng.randint(1, 28)
        month = rng.randint(1, 12)
        result = {
            "id": f"oa{i:05d}::{rng.randrange(16**8):08x}",
            "mainTitle": title,
            "description": abstract,
            "publicationDate": f"{years()}-{month:02d}-{day:02d}",
            "countries": ["DK"] + (rng.sample(DK_PARTNERS, k=1) if rng.random() < 0.3 else []),
        }
        if rng.random() < 0.4:
            result["doi"] = f"10.8{i:03d}/oa.{rng.randint(100, 999)}"
        results.append(result)
    # The documented year-extraction case.
    t, a = make_text("policy", 0, 0)
    results.append({
        "id": "oa90001::fixedyear",
        "mainTitle": t,
        "description": a,
        "publicationDate": "2016-03-01",
        "countries": ["DK"],
    })
    # Filtered out: two without country fields, one foreign, one out of range.
    t, a = make_text("medicine")
    results.append({"id": "oa90002::nocountry", "mainTitle": t, "description": a,
                    "publicationDate": "2017-05-10", "countries": []})
    t, a = make_text("quantum")
    results.append({"id": "oa90003::nocountry", "mainTitle": t, "description": a,
                    "publicationDate": "2018-02-20"})
    t, a = make_text("food")
    results.append({"id": "oa90004::foreign", "mainTitle": t, "description": a,
                    "publicationDate": "2015-09-01", "countries": ["SE"]})
    t, a = make_text("computing")
    results.append({"id": "oa90005::early", "mainTitle": t, "description": a,
                    "publicationDate": "2013-11-30", "countries": ["DK"]})
    assert len(results) == 84, len(results)
    return [results[:42], results[42:]]


def cordis_projects():
    """One bulk chunk: 42 projects + organization rows; 40 have a DK participant."""
    sdg = {
        "energy": [(1, 2), (3, 0)],
        "emissions": [(0, 1)],
        "policy": [(2, 0), (4, 1)],
        "fuels": [(0, 1), (2, 2), (4, 0)],
        "oceans": [(1, 1)],
        "econ": [(0, 0)],
        "informatics": [(1, 0)],
        "biosphere": [(2, 0)],
    }
    plain = {"medicine": 6, "quantum": 6, "food": 6, "heritage": 5, "computing": 5}
    plan = plan_records(sdg, plain)
    projects = []
    organizations = []
    for i, (theme, sdg_idx, seed_idx, extras) in enumerate(plan):
        title, objective = make_text(theme, sdg_idx, seed_idx, extras)
        pid = 760000 + i
        projects.append({
            "id": pid,
            "acronym": f"PRJ{i:03d}",
            "title": title,
            "objective": objective,
            "startDate": f"{years()}-{rng.randint(1, 12):02d}-01",
        })
        organizations.append({"projectID": pid, "country": "DK",
                              "name": rng.choice(["Aarhus Universitet", "Danmarks Tekniske Universitet",
                                                  "Kobenhavns Universitet", "Aalborg Universitet"])})
        for partner in rng.sample(DK_PARTNERS, k=rng.randint(0, 3)):
            organizations.append({"projectID": pid, "country": partner, "name": f"Partner {partner}"})
    # Two projects without any Danish participant (filtered out).
    for j, theme in enumerate(["medicine", "computing"]):
        title, objective = make_text(theme)
        pid = 769000 + j
        projects.append({
            "id": pid,
            "acronym": f"EXT{j}",
            "title": title,
            "objective": objective,
            "startDate": f"{years()}-03-01",
        })
        organizations.append({"projectID": pid, "country": "DE", "name": "Partner DE"})
    assert len(projects) == 42
    return {"projects": projects, "organizations": organizations}


def kohesio_rows():
    """Tabular export: 23 Danish regional projects."""
    sdg = {
        "energy": [(2, 1)],
        "policy": [(0, 2)],
        "fuels": [(3, 0)],
        "biosphere": [(4, 1)],
        "emissions": [(2, 0)],
        "oceans": [(2, None)],
    }
    plain = {"medicine": 4, "food": 4, "heritage": 3, "computing": 3, "quantum": 3}
    plan = plan_records(sdg, plain)
    rows = []
    for i, (theme, sdg_idx, seed_idx, extras) in enumerate(plan):
        title, summary = make_text(theme, sdg_idx, seed_idx, extras)
        rows.append({
            "id": f"Q31{i:05d}",
            "label": title,
            "summary": summary,
            "start_date": f"{years()}-{rng.randint(1, 12):02d}-15",
            "country": "DK",
        })
    assert len(rows) == 23
    return rows


# ---------------------------------------------------------------------------
# Canonical corpus serialization mirror (newline-delimited JSON).

DOI_RE = re.compile(r"10\.[0-9]{4,9}/\S+")


def normalize_doi(raw):
    m = DOI_RE.search(raw.lower())
    return m.group(0) if m else None


def record_line(record):
    obj = {
        "record_id": record["record_id"],
        "source": record["source"],
        "kind": record["kind"],
        "title": record["title"],
        "body": record["body"],
        "year": record["year"],
        "country_codes": sorted(set(record["country_codes"])),
    }
    if record.get("doi"):
        obj["doi"] = record["doi"]
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def records_from_pages(openalex_pages, openaire_pages, cordis_chunk, kohesio):
    out = {"openalex": [], "openaire": [], "cordis": [], "kohesio": []}
    for page in openalex_pages:
        for work in page:
            body = ""
            if "abstract_inverted_index" in work:
                slots = []
                for token, positions in work["abstract_inverted_index"].items():
                    for pos in positions:
                        slots.append((pos, token))
                slots.sort(key=lambda s: s[0])
                body = " ".join(token for _, token in slots)
            countries = set()
            for authorship in work.get("authorships", []):
                for inst in authorship.get("institutions", []):
                    if "country_code" in inst:
                        countries.add(inst["country_code"])
            out["openalex"].append({
                "record_id": "openalex:" + work["id"].rsplit("/", 1)[-1],
                "source": "openalex", "kind": "publication",
                "title": work.get("title", ""), "body": body,
                "year": work.get("publication_year", 0),
                "country_codes": countries,
                "doi": normalize_doi(work["doi"]) if "doi" in work else None,
            })
    for page in openaire_pages:
        for result in page:
            out["openaire"].append({
                "record_id": "openaire:" + result["id"],
                "source": "openaire", "kind": "publication",
                "title": result.get("mainTitle", ""),
                "body": result.get("description", ""),
                "year": int(result.get("publicationDate", "0000")[:4]),
                "country_codes": set(result.get("countries", [])),
                "doi": normalize_doi(result["doi"]) if "doi" in result else None,
            })
    countries_by_project = {}
    for org in cordis_chunk["organizations"]:
        countries_by_project.setdefault(org["projectID"], set()).add(org["country"])
    for project in cordis_chunk["projects"]:
        out["cordis"].append({
            "record_id": f"cordis:{project['id']}",
            "source": "cordis", "kind": "project",
            "title": project["title"], "body": project["objective"],
            "year": int(project["startDate"][:4]),
            "country_codes": countries_by_project.get(project["id"], set()),
            "doi": None,
        })
    for row in kohesio:
        out["kohesio"].append({
            "record_id": "kohesio:" + row["id"],
            "source": "kohesio", "kind": "project",
            "title": row["label"], "body": row["summary"],
            "year": int(row["start_date"][:4]),
            "country_codes": {row["country"]},
            "doi": None,
        })
    filtered = {}
    for source, records in out.items():
        filtered[source] = [r for r in records
                            if "DK" in r["country_codes"] and 2014 <= r["year"] <= 2019]
    return filtered


# ---------------------------------------------------------------------------
# Oracle: tagging and weak labels over the filtered corpus.

def found_terms(text):
    toks = tokens_of(text)
    found = set()
    for term_id, surfaces in TERMS.items():
        for surface in surfaces:
            if contains_phrase(toks, normalize(surface).split(" ")):
                found.add(term_id)
                break
    return found


def rule_satisfied(rule, found):
    return (all(t in found for t in rule["all_of"])
            and (not rule["any_of"] or any(t in found for t in rule["any_of"]))
            and not any(t in found for t in rule["none_of"]))


def is_sdg(text):
    found = found_terms(text)
    return any(rule_satisfied(rule, found) for rule in RULES)


def weak_label(text):
    toks = tokens_of(text)
    hits = {}
    for panel, seeds in SEEDS.items():
        count = sum(1 for seed in seeds if contains_phrase(toks, normalize(seed).split(" ")))
        hits[panel] = count
    ranked = sorted(hits.items(), key=lambda kv: -kv[1])
    best_panel, best_count = ranked[0]
    if best_count < 2 or (len(ranked) > 1 and ranked[1][1] == best_count):
        return None
    return best_panel


STOPWORDS = """a about above after again against all am an and any are as at be because been
before being below between both but by could did do does doing down during each few for from
further had has have having he her here hers herself him himself his how i if in into is it its
itself just me more most my myself no nor not now of off on once only or other our ours ourselves
out over own same she should so some such than that the their theirs them themselves then there
these they this those through to too under until up very was we were what when where which while
who whom why will with you your yours yourself yourselves also among based can may might must
however moreover therefore thus towards upon within without across along already although always
anything around became become becomes becoming beside besides beyond cannot co de done due eg
eight either else elsewhere enough etc even ever every everyone everything everywhere except five
first followed following former formerly four found further gets give given gives go goes got had
hence her hereafter hereby herein hereupon hers how hundred ie indeed instead itself keep last
latter latterly least less like little made make makes many meanwhile mostly much must namely
neither never nevertheless next nine nobody none nonetheless noone nothing now nowhere often on
one onto others otherwise ought our per perhaps put rather re regarding respectively said same
second see seem seemed seeming seems seven several shall show showed shown shows since six so some
somehow someone something sometime sometimes somewhere still such take taken ten than that their
them then thence there thereafter thereby therefore therein thereupon these they third this those
though three through throughout thru thus to together too toward towards twelve twenty two under
unless until up upon us use used uses using various very via was well were what whatever when
whence whenever where whereafter whereas whereby wherein whereupon wherever whether which while
whither who whoever whole whom whose why will with within without would yet you your yours""".split()


def bow_stats(texts, min_df=2, min_doc_len=3):
    stop = set(STOPWORDS)
    docs = []
    df = {}
    for text in texts:
        toks = [t for t in tokens_of(text) if t not in stop and len(t) >= 3]
        docs.append(toks)
        for t in set(toks):
            df[t] = df.get(t, 0) + 1
    vocab = set()
    surviving = 0
    for toks in docs:
        kept = [t for t in toks if df[t] >= min_df]
        if len(kept) >= min_doc_len:
            surviving += 1
            vocab.update(kept)
    return len(vocab), surviving


# ---------------------------------------------------------------------------

def dump_json(path, obj, indent=2):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=indent, ensure_ascii=False) + "\n", encoding="utf-8")


def main():
    openalex_pages = openalex_works()
    openaire_pages = openaire_results()
    cordis_chunk = cordis_projects()
    kohesio = kohesio_rows()

    # Source pages.
    for i, page in enumerate(openalex_pages):
        cursor = f"page{i + 1}" if i + 1 < len(openalex_pages) else None
        dump_json(FIX / "openalex" / f"page_{i:03d}.json",
                  {"meta": {"count": 57, "next_cursor": cursor}, "results": page})
    for i, page in enumerate(openaire_pages):
        cursor = f"page{i + 1}" if i + 1 < len(openaire_pages) else None
        dump_json(FIX / "openaire" / f"page_{i:03d}.json",
                  {"header": {"numFound": 84, "nextCursor": cursor}, "results": page})
    dump_json(FIX / "cordis" / "page_000.json", cordis_chunk)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "label", "summary", "start_date", "country"])
    for row in kohesio:
        writer.writerow([row["id"], row["label"], row["summary"], row["start_date"], row["country"]])
    (FIX / "kohesio").mkdir(parents=True, exist_ok=True)
    (FIX / "kohesio" / "page_000.csv").write_text(buf.getvalue(), encoding="utf-8")

    # Vocabulary, lexicons, stopwords.
    dump_json(FIX / "vocab" / "sdg13_sample.json",
              {"sdg_id": "SDG13", "terms": TERMS, "rules": RULES})
    dump_json(FIX / "lexicons" / "erc_panel_seeds.json", SEEDS)
    (FIX / "stopwords_en.txt").write_text("\n".join(sorted(set(STOPWORDS))) + "\n", encoding="utf-8")

    # Expected canonical corpus files.
    corpus = records_from_pages(openalex_pages, openaire_pages, cordis_chunk, kohesio)
    (FIX / "corpus").mkdir(parents=True, exist_ok=True)
    for source, records in corpus.items():
        lines = "".join(record_line(r) + "\n" for r in records)
        (FIX / "corpus" / f"corpus_{source}.ndjson").write_text(lines, encoding="utf-8")

    # Special fixture directories for error-path tests.
    dump_json(FIX / "special" / "openalex_empty" / "page_000.json",
              {"meta": {"count": 0, "next_cursor": None}, "results": []})
    (FIX / "special" / "openalex_bad").mkdir(parents=True, exist_ok=True)
    (FIX / "special" / "openalex_bad" / "page_000.json").write_text("{not json", encoding="utf-8")

    # Oracle-computed expectations.
    tagging = {}
    sdg_texts = []
    labels = {}
    for source, records in corpus.items():
        tagged = 0
        for r in records:
            text = r["title"] + "\n" + r["body"]
            if is_sdg(text):
                tagged += 1
                sdg_texts.append((r["record_id"], text))
        tagging[source] = {"total": len(records), "tagged": tagged}
    for record_id, text in sdg_texts:
        panel = weak_label(text)
        if panel:
            labels[record_id] = panel
    by_panel = {}
    for panel in labels.values():
        by_panel[panel] = by_panel.get(panel, 0) + 1
    vocab_size, surviving_docs = bow_stats([t for _, t in sdg_texts])

    manifest_path = FIX / "manifest.json"
    frozen = {}
    if manifest_path.exists():
        frozen = json.loads(manifest_path.read_text(encoding="utf-8")).get("frozen", {})
    manifest = {
        "harvest": {
            "per_source": {s: len(r) for s, r in corpus.items()},
            "pages": {"openalex": 3, "openaire": 2, "cordis": 1, "kohesio": 1},
            "total": sum(len(r) for r in corpus.values()),
        },
        "tagging": tagging,
        "weak_labels": {
            "labeled": len(labels),
            "by_panel": dict(sorted(by_panel.items())),
        },
        "bow": {"vocabulary_size": vocab_size, "documents": surviving_docs},
        "examples": {
            "no_abstract": "openalex:W9200000001",
            "doi_case": "openalex:W9200000002",
            "uppercase_tag": "openalex:W9200000003",
            "acclimate_trap": "openalex:W9200000004",
            "organizational_trap": "openalex:W9200000005",
            "tie_record": "openalex:W9200000007",
            "year_case": "openaire:oa90001::fixedyear",
        },
        "frozen": frozen,  # filled from a verified seeded run
    }
    dump_json(manifest_path, manifest)

    config = {
        "sources": {
            "openalex": {"mode": "fixture", "fixture_dir": "openalex", "page_size": 25},
            "openaire": {"mode": "fixture", "fixture_dir": "openaire", "page_size": 50},
            "cordis": {"mode": "fixture", "fixture_dir": "cordis", "page_size": 100},
            "kohesio": {"mode": "fixture", "fixture_dir": "kohesio", "page_size": 100},
        },
        "filters": {"country_code": "DK", "year_from": 2014, "year_to": 2019},
        "vocabulary_path": "vocab/sdg13_sample.json",
        "lexicon_path": "lexicons/erc_panel_seeds.json",
        "classifier": {"epochs": 300, "learning_rate": 0.1, "l2": 0.0001, "min_df": 2,
                        "max_vocab": 50000, "threshold": 0.1},
        "topics": {"k": 30, "beta": 0.01, "sweeps": 1000, "seed": 13, "min_df": 2,
                    "min_doc_len": 3, "stopwords_path": "stopwords_en.txt"},
        "embed": {"perplexity": 15, "iterations": 1000, "learning_rate": 200, "seed": 17},
        "output_dir": "../out",
        "cache_dir": "../cache",
    }
    dump_json(FIX / "config.json", config)

    print("sdg records:", len(sdg_texts), "labeled:", len(labels))
    print("tagging:", json.dumps(tagging))
    print("labels by panel:", json.dumps(dict(sorted(by_panel.items()))))
    print("bow vocab:", vocab_size, "docs:", surviving_docs)


if __name__ == "__main__":
    main()
