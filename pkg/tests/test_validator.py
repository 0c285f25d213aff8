import json
import shutil

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from corpus import SKILL_POINTS, SKILLSET_POINTS, build_skill, build_skillset, expected
from fixtures import (
    make_developer_skillset,
    make_diagnostics_listing_fixture,
    make_listing_skill,
    write,
)
from skilldex.errors import SkilldexError
from skilldex.validator import (
    ERROR,
    PASS,
    SKILL_CHECKS,
    SKILLSET_CHECKS,
    WARNING,
    render_human,
    score_of,
    validate_skill,
    validate_skillset,
)


def _by_check(result):
    return {d.check_id: d for d in result.diagnostics}


def test_tables_match_hand_values():
    assert SKILL_CHECKS == SKILL_POINTS
    assert SKILLSET_CHECKS == SKILLSET_POINTS
    assert sum(SKILL_CHECKS.values()) == 100
    assert sum(SKILLSET_CHECKS.values()) == 100


def test_full_marks(tmp_path):
    d = tmp_path / "good"
    desc = " ".join(["word"] * 31)
    body = "## Steps\n\nRun [it](scripts/run.sh) and see [pic](assets/diagram.png).\n" + "line\n" * 80
    write(d / "SKILL.md", f"---\nname: good\ndescription: {desc}\n---\n{body}")
    write(d / "scripts" / "run.sh", "#!/bin/sh\n")
    write(d / "assets" / "diagram.png", "png")
    assert len((d / "SKILL.md").read_text().splitlines()) == 87
    result = validate_skill(d)
    assert result.score == 100
    assert result.error_count == 0
    assert result.pass_count == 8


def test_no_frontmatter_is_fatal(tmp_path):
    write(tmp_path / "s" / "SKILL.md", "## Instructions\n")
    result = validate_skill(tmp_path / "s")
    assert result.score == 0
    assert len(result.diagnostics) == 1
    assert result.diagnostics[0].severity == ERROR
    assert result.pass_count == 0
    assert result.fatal


def test_malformed_frontmatter_is_fatal(tmp_path):
    write(tmp_path / "s" / "SKILL.md", "---\nname: [oops\n---\n")
    result = validate_skill(tmp_path / "s")
    assert (result.score, len(result.diagnostics), result.diagnostics[0].line) == (0, 1, 2)


def test_diagnostics_listing_fixture(tmp_path):
    result = validate_skill(make_diagnostics_listing_fixture(tmp_path))
    checks = _by_check(result)
    assert checks["DESC_LENGTH"].severity == ERROR
    assert checks["DESC_LENGTH"].line == 4
    assert "description too short (12 words, recommended: 30+)" in checks["DESC_LENGTH"].message
    assert checks["SUBDIRS"].severity == WARNING
    assert 'Unknown subdirectory "helpers"' in checks["SUBDIRS"].message
    # 25+10+10+15+15+5 from the point table
    assert result.score == 80


def test_listing_skill_scores(tmp_path):
    result = validate_skill(make_listing_skill(tmp_path))
    checks = _by_check(result)
    # its description has 23 words, under the 30-word recommendation
    assert checks["DESC_LENGTH"].severity == ERROR
    assert "23 words" in checks["DESC_LENGTH"].message
    assert result.score == 90
    assert result.subject == "forensics-memory-analysis"
    assert result.spec_version == "1.0"


def test_misplaced_script_and_doc(tmp_path):
    d = tmp_path / "s"
    write(d / "SKILL.md", "---\nname: s\n---\n[a](run.py)\n[b](assets/notes.md)\n[c](assets/x.csv)\n")
    write(d / "run.py", "")
    write(d / "assets" / "notes.md", "")
    write(d / "assets" / "x.csv", "")
    placed = _by_check(validate_skill(d))["RESOURCES_PLACED"]
    assert placed.severity == ERROR
    assert "run.py should be under scripts/" in placed.message
    assert "assets/notes.md should be under references/" in placed.message
    assert "x.csv" not in placed.message
    assert placed.line == 4


def test_broken_link_counted_once(tmp_path):
    d = tmp_path / "s"
    write(d / "SKILL.md", "---\nname: s\n---\nsee [gone](scripts/tool.py)\n")
    checks = _by_check(validate_skill(d))
    assert checks["RESOURCES_EXIST"].severity == ERROR
    assert checks["RESOURCES_EXIST"].line == 4
    assert checks["RESOURCES_PLACED"].severity == PASS


def test_broken_misplaced_link_fails_both(tmp_path):
    # placement is judged by path so that deleting a file can never raise the score
    d = tmp_path / "s"
    write(d / "SKILL.md", "---\nname: s\n---\nsee [gone](tool.py)\n")
    checks = _by_check(validate_skill(d))
    assert checks["RESOURCES_EXIST"].severity == ERROR
    assert checks["RESOURCES_PLACED"].severity == ERROR


def test_hidden_dirs_and_root_files_allowed(tmp_path):
    d = tmp_path / "s"
    write(d / "SKILL.md", "---\nname: s\n---\n")
    write(d / ".git" / "HEAD", "ref")
    write(d / "LICENSE", "MIT")
    assert _by_check(validate_skill(d))["SUBDIRS"].severity == PASS


def test_line_budget_counts_frontmatter(tmp_path):
    d = tmp_path / "s"
    write(d / "SKILL.md", "---\nname: s\n---\n" + "x\n" * 497)
    assert _by_check(validate_skill(d))["LINE_BUDGET"].severity == PASS
    write(d / "SKILL.md", "---\nname: s\n---\n" + "x\n" * 498)
    assert _by_check(validate_skill(d))["LINE_BUDGET"].severity == ERROR


def test_spec_version_from_frontmatter(tmp_path):
    d = tmp_path / "s"
    write(d / "SKILL.md", '---\nname: s\nspec_version: "1.1"\n---\n')
    assert validate_skill(d).spec_version == "1.1"


def test_errors_for_missing_inputs(tmp_path):
    with pytest.raises(SkilldexError) as exc:
        validate_skill(tmp_path / "nope")
    assert exc.value.code == "E_NOT_A_DIRECTORY"
    (tmp_path / "empty").mkdir()
    with pytest.raises(SkilldexError) as exc:
        validate_skill(tmp_path / "empty")
    assert exc.value.code == "E_NO_SKILL_FILE"
    with pytest.raises(SkilldexError) as exc:
        validate_skillset(tmp_path / "empty")
    assert exc.value.code == "E_NO_SKILLSET_FILE"


def test_json_shape(tmp_path):
    data = validate_skill(make_diagnostics_listing_fixture(tmp_path)).to_dict()
    assert set(data) == {"skill", "score", "diagnostics", "specVersion", "passCount", "warnCount", "errorCount"}
    assert data["passCount"] + data["warnCount"] + data["errorCount"] == len(data["diagnostics"])
    assert set(data["diagnostics"][0]) == {"severity", "line", "message", "checkId"}
    json.dumps(data)


def test_human_rendering(tmp_path):
    result = validate_skill(make_diagnostics_listing_fixture(tmp_path))
    lines = render_human(result).splitlines()
    assert lines[-2:] == ["Format conformance score: 80/100", "Validated against: skill-format v1.0"]
    assert "  error   line 4: description too short (12 words, recommended: 30+)" in lines
    assert "  pass    YAML frontmatter valid" in lines


def test_developer_skillset_scores_full(tmp_path):
    result = validate_skillset(make_developer_skillset(tmp_path))
    assert result.score == 100
    assert "31 words" in _by_check(result)["DESC_LENGTH"].message


def test_skillset_without_skills(tmp_path):
    d = tmp_path / "ss"
    write(d / "SKILLSET.md", "---\nname: ss\ndescription: " + " ".join(["w"] * 30) + "\n---\n")
    result = validate_skillset(d)
    assert result.score == 80
    assert _by_check(result)["MIN_SKILLS"].severity == ERROR


def test_skillset_without_frontmatter(tmp_path):
    write(tmp_path / "ss" / "SKILLSET.md", "# nothing\n")
    result = validate_skillset(tmp_path / "ss")
    assert result.score == 0 and len(result.diagnostics) == 1


def test_remote_refs_count_toward_min_skills(tmp_path):
    d = tmp_path / "ss"
    write(d / "SKILLSET.md", "---\nname: ss\nskills:\n  - name: r\n    source_url: https://github.com/o/r\n---\n")
    checks = _by_check(validate_skillset(d))
    assert checks["MIN_SKILLS"].severity == PASS
    assert checks["REMOTE_URLS"].severity == PASS


def test_remote_url_must_be_github(tmp_path):
    d = tmp_path / "ss"
    write(d / "SKILLSET.md",
          "---\nname: ss\nskills:\n  - name: r\n    source_url: http://github.com/o/r\n---\n")
    checks = _by_check(validate_skillset(d))
    assert checks["REMOTE_URLS"].severity == ERROR
    assert checks["REMOTE_URLS"].line == 3


def test_validation_is_deterministic(tmp_path):
    d = make_developer_skillset(tmp_path)
    a = json.dumps(validate_skillset(d).to_dict(), sort_keys=True)
    b = json.dumps(validate_skillset(d).to_dict(), sort_keys=True)
    assert a == b


skill_cases = st.fixed_dictionaries({k: st.booleans() for k in SKILL_POINTS})
skillset_cases = st.fixed_dictionaries({k: st.booleans() for k in SKILLSET_POINTS})


@settings(max_examples=60, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(case=skill_cases)
def test_score_is_sum_of_passes(tmp_path_factory, case):
    d = build_skill(tmp_path_factory.mktemp("skill"), case)
    result = validate_skill(d)
    assert result.score == expected(case, SKILL_POINTS)
    assert result.score == score_of(result.diagnostics, SKILL_CHECKS)
    assert 0 <= result.score <= 100
    assert result.pass_count + result.warn_count + result.error_count == len(result.diagnostics)


@settings(max_examples=40, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(case=skillset_cases)
def test_skillset_score_is_sum_of_passes(tmp_path_factory, case):
    d = build_skillset(tmp_path_factory.mktemp("skillset"), case)
    result = validate_skillset(d)
    assert result.score == expected(case, SKILLSET_POINTS)
    assert result.score == score_of(result.diagnostics, SKILLSET_CHECKS)


@settings(max_examples=30, suppress_health_check=[HealthCheck.function_scoped_fixture])
@given(case=skill_cases, victim=st.sampled_from(["references/guide.md", "guide-misplaced.md"]))
def test_deleting_a_resource_never_raises_score(tmp_path_factory, case, victim):
    d = build_skill(tmp_path_factory.mktemp("mono"), case)
    before = validate_skill(d).score
    target = d / victim
    target.unlink()
    assert validate_skill(d).score <= before
    shutil.rmtree(d)
