"""Shared fixture data: the published example workflows and trajectories
(copied with their LaTeX escapes), plus small synthetic records."""

from awm.core import Experience, Step, Workflow, WorkflowStep, parse_action
from awm.pipeline import RunConfig, run_live
from awm.scripted import scripted_lm

SHOPPING_BLOCK = r"""## shopping: Browse Products in a Specific Category
To browse products in a specific category, I need to navigate to the relevant main category. I will start by hovering over the main category menu item to reveal the subcategories.
hover('main\_category\_id')
To browse products in the specific subcategory, I need to click on the subcategory link.
click('subcategory\_id')"""

SHOPPING_ADMIN_BLOCK = r"""## shopping admin: Edit and Save Changes
This workflow is used to edit specific fields and save changes.
To edit a specific field, I need to locate the field and update its value.
clear('{field\_id}')
fill('{field\_id}', '{new\_value}')
Next, I need to save the changes by clicking the "Save" button.
click('{save\_button\_id}')"""

REDDIT_BLOCK = r"""## reddit: Navigate to a forum section and select a specific forum
To navigate to a specific forum, I need to click on the "Forums" section.
click('42')
Now, I need to click on the specific forum link based on the forum name provided.
click('<forum\_link\_id>')"""

GITLAB_BLOCK = r"""## gitlab: Navigation to Repository and Contributors Section
This workflow involves searching for a repository and navigating to its contributors to find detailed contribution data.
First, search for the specific repository to gather information.
fill('130', '\{RepositoryName\}')
press('130', 'Enter')
Navigate to the "Contributors" section to view contribution details.
click('311')  # "Contributors" link
Obtain and report the required contributor details.
send\_msg\_to\_user('\{ContributorDetails\}')"""

MAP_BLOCK = r"""## map: Calculate Travel Time and Distance
To calculate travel time and distance between two locations, I will use the directions feature. I will fill in the respective fields and select the mode of transportation.
fill('158', 'FROM\_LOCATION')
fill('163', 'TO\_LOCATION')
select\_option('166', 'MODE\_OF\_TRANSPORTATION')
click('171')
I will use these details to provide the user with accurate travel time and distance information.
send\_msg\_to\_user('The distance between FROM\_LOCATION and TO\_LOCATION is DISTANCE and the estimated travel time is TIME.')"""

PUBLISHED_BLOCKS = [SHOPPING_BLOCK, SHOPPING_ADMIN_BLOCK, REDDIT_BLOCK, GITLAB_BLOCK, MAP_BLOCK]

# rule-induction example trajectory, verbatim action strings
RULE_TRAJECTORY = ["CLICK(12)", "CLICK('12')", "CLICK('30')", "TYPE(44, \"cat\")", "TYPE('44', \"cat\")"]
RULE_EXPECTED = ["CLICK('12')", "CLICK('30')", "TYPE('44', \"cat\")"]


def steps(*lines, obs="", macros=None):
    return tuple(Step(action=parse_action(l, macros), observation=obs) for l in lines)


def experience(id, lines, website="shop", instruction=None, template_id=None, success=None, macros=None):
    return Experience(id=id, website=website, instruction=instruction or f"task {id}",
                      steps=steps(*lines, macros=macros), template_id=template_id, success=success)


def rule_pair():
    """Two experiences with identical signatures; the first has invalid steps."""
    a = experience("e1", RULE_TRAJECTORY, instruction="Search for cat products")
    b = experience("e2", ["CLICK(7)", "CLICK('7')", "CLICK('31')", "TYPE(45, \"dog\")", "TYPE('45', \"dog\")"],
                   instruction="Search for dog products")
    return [a, b]


def workflow(id, website, description, lines, source="lm"):
    return Workflow(id=id, website=website, description=description,
                    steps=tuple(WorkflowStep(action=parse_action(l)) for l in lines), source=source)


LOGIN_WORKFLOW_LINES = [
    "click('{box1_id}')",
    "type('{box1_id}', '{username}')",
    "click('{box2_id}')",
    "type('{box2_id}', '{password}')",
    "click('{submit_id}')",
]


LOGIN_SITE = {
    "name": "login",
    "start_page": "login",
    "pages": {
        "login": {
            "title": "Sign in",
            "elements": [
                {"id": 11, "role": "textbox", "label": "Username"},
                {"id": 12, "role": "textbox", "label": "Password"},
                {"id": 13, "role": "button", "label": "Log in"},
            ],
            "transitions": [
                {"element": 13, "action": "click", "target": "home",
                 "effects": [{"set": "user", "to": "{@11}"}, {"set": "password", "to": "{@12}"}]},
            ],
        },
        "home": {"title": "Welcome {user}", "elements": [{"id": 21, "role": "text", "label": "Signed in as {user}"}]},
    },
}


# Ten teacher-forced steps over three tasks, scored by hand:
#   element correct 9/10, step success 7/10, tasks fully correct 1/3,
#   action F1 (1 + .8 + 1 + 1) + (1 + 1 + 1) + (1 + 1 + .5) = 9.3 over 10.
STEP_FIXTURE = [
    (["click('12')", "type('44', 'cat food')", "click('30')", "stop()"],
     ["click('12')", "type('44', 'cat')", "click('30')", "stop()"]),
    (["click('5')", "fill('6', 'blue shoes')", "click('7')"],
     ["click('5')", "fill('6', 'blue shoes')", "click('7')"]),
    (["click('1')", "click('2')", "send_msg_to_user('42')"],
     ["click('9')", "click('2')", "send_msg_to_user('41')"]),
]
STEP_FIXTURE_EXPECTED = {"element_acc": 0.9, "step_sr": 0.7, "task_sr": 1 / 3, "action_f1": 0.93}


def quality_fixture():
    """Three workflows whose bigrams are (click,fill) twice, (fill,press),
    (hover,click) and (click,type): one shared out of four distinct."""
    ws = [
        workflow("q1", "shop", "Search for a product", ["click('{menu_id}')", "fill('301', '{query}')"]),
        workflow("q2", "shop", "Search and submit",
                 ["click('{menu_id}')", "fill('301', '{query}')", "press('301', 'Enter')"]),
        workflow("q3", "shop", "Write a review", ["hover('{item_id}')", "click('{review_id}')", "type('7', '{text}')"]),
    ]
    # 2 of 5 gold steps match: click('5') and fill('301', 'mug')
    gold = [experience("g1", ["click('5')", "fill('301', 'mug')", "fill('999', 'mug')",
                              "select_option('3', 'x')", "stop()"])]
    # 2 of 4 predictions use a workflow: p1 by signature, p3 by macro call
    predicted = [
        experience("p1", ["click('2')", "fill('301', 'tea')", "stop()"]),
        experience("p2", ["hover('4')", "stop()"]),
        experience("p3", ["find_place('x')", "stop()"], macros={"find_place": 1}),
        experience("p4", ["click('1')", "click('2')", "stop()"]),
    ]
    return ws, gold, predicted


def demonstrations(tasks):
    """Successful no-memory episodes, one per task, as training data."""
    cfg = RunConfig(use_memory=False)
    result = run_live(tasks, None, scripted_lm(tasks, len(tasks)), cfg)
    assert result.report.task_sr == 1.0
    return result.experiences


def oracle_dedup(E, key, n):
    """Brute force: pairwise key comparison, rank by numeric id suffix."""
    kept = []
    for i, e in enumerate(E):
        k = key(e)
        if k is None:
            kept.append((i, i))
            continue
        group = [j for j in range(len(E)) if key(E[j]) == k]
        ranked = sorted(group, key=lambda j: int(E[j].id[1:]))
        if i in ranked[:n]:
            kept.append((group[0], i))
    return [E[i] for _, i in sorted(kept)]


_VERBS = ["click", "type", "hover"]


def random_experience_set(rng, size):
    ids = rng.sample(range(1, 200), size)
    out = []
    for i in ids:
        names = [rng.choice(_VERBS) for _ in range(rng.randint(0, 3))]
        lines = [f"{v}('1')" if v != "type" else "type('1', 'x')" for v in names]
        tid = rng.choice([None, "t1", "t2", "t3"])
        out.append(experience(f"e{i}", lines, template_id=tid))
    return out
