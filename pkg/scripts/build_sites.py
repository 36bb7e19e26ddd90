"""Regenerate the bundled simulated-site definitions.

    python scripts/build_sites.py

Writes src/awm/simenv/sites/{map,shopping,reddit}.json. Data tables that
depend on other tables (routes, per-category extremes) are computed here so
the JSON stays purely declarative.
"""

import json
from itertools import permutations
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "awm" / "simenv" / "sites"


def el(id, role, label, **extra):
    return {"id": id, "role": role, "label": label, **extra}


def tr(element, action, target=None, effects=(), value=None, fallback=None):
    t = {"element": element, "action": action}
    if value is not None:
        t["value"] = value
    if target is not None:
        t["target"] = target
    if effects:
        t["effects"] = list(effects)
    if fallback is not None:
        t["fallback"] = fallback
    return t


def home_link(id):
    return tr(id, "click", "home")


# --------------------------------------------------------------------- map

PLACES = {
    "Carnegie Mellon University": {"category": "university", "zip": "15213", "rating": "4.7", "x": 3, "y": 4},
    "Phipps Conservatory": {"category": "botanical garden", "zip": "15217", "rating": "4.8", "x": 4, "y": 5},
    "Heinz Field": {"category": "stadium", "zip": "15212", "rating": "4.5", "x": 0, "y": 2},
    "Andy Warhol Museum": {"category": "art museum", "zip": "15222", "rating": "4.6", "x": 1, "y": 1},
    "Pittsburgh International Airport": {"category": "airport", "zip": "15231", "rating": "4.2", "x": -9, "y": -3},
    "Kennywood": {"category": "amusement park", "zip": "15122", "rating": "4.4", "x": 8, "y": -2},
    "Primanti Brothers Strip District": {"category": "restaurant", "zip": "15222", "rating": "4.3", "x": 1, "y": 3},
    "Frick Fine Arts Building": {"category": "gallery", "zip": "15260", "rating": "4.1", "x": 3, "y": 2},
}
MODES = {"driving": 40, "cycling": 15, "walking": 5}  # km/h


def routes():
    table = {}
    for a, b in permutations(PLACES, 2):
        pa, pb = PLACES[a], PLACES[b]
        km = abs(pa["x"] - pb["x"]) + abs(pa["y"] - pb["y"])
        for mode, speed in MODES.items():
            table[f"{a}|{b}|{mode}"] = {"distance": str(km), "time": str(round(60 * km / speed))}
    return table


def map_site():
    places = {k: {f: str(v) for f, v in row.items() if f not in ("x", "y")} for k, row in PLACES.items()}
    find = [{"lookup": "places", "key": "{@101}", "as": "place"}]
    pages = {
        "home": {
            "title": "Map",
            "elements": [el(101, "textbox", "Search"), el(102, "button", "Go"), el(103, "link", "Directions")],
            "transitions": [
                tr(102, "click", "place", find, fallback="no_results"),
                tr(101, "press", "place", find, value="Enter", fallback="no_results"),
                tr(103, "click", "directions"),
            ],
        },
        "place": {
            "title": "{place}",
            "elements": [
                el(201, "text", "Name: {place}"),
                el(202, "text", "Category: {place_category}"),
                el(203, "button", "Show address"),
                el(205, "link", "Reviews"),
                el(204, "link", "Home"),
            ],
            "transitions": [tr(203, "click", "address"), tr(205, "click", "reviews"), home_link(204)],
        },
        "address": {
            "title": "Address of {place}",
            "elements": [el(211, "text", "Place: {place}"), el(212, "text", "Zip code: {place_zip}"), el(213, "link", "Home")],
            "transitions": [home_link(213)],
        },
        "reviews": {
            "title": "Reviews of {place}",
            "elements": [el(221, "text", "Average rating: {place_rating}"), el(222, "link", "Home")],
            "transitions": [home_link(222)],
        },
        "directions": {
            "title": "Directions",
            "elements": [
                el(158, "textbox", "From"),
                el(163, "textbox", "To"),
                el(166, "option", "Mode", options=list(MODES), value="driving"),
                el(171, "button", "Go"),
                el(172, "link", "Home"),
            ],
            "transitions": [
                tr(171, "click", "route", [{"lookup": "routes", "key": "{@158}|{@163}|{@166}", "as": "route"},
                                           {"set": "route_from", "to": "{@158}"}, {"set": "route_to", "to": "{@163}"},
                                           {"set": "route_mode", "to": "{@166}"}],
                   fallback="no_route"),
                home_link(172),
            ],
        },
        "route": {
            "title": "Route",
            "elements": [
                el(180, "text", "From {route_from} to {route_to} by {route_mode}"),
                el(181, "text", "Distance: {route_distance} km"),
                el(184, "button", "Show travel time"),
                el(183, "link", "Home"),
            ],
            "transitions": [tr(184, "click", "route_time"), home_link(183)],
        },
        "route_time": {
            "title": "Travel time",
            "elements": [el(186, "text", "Estimated time: {route_time} min"), el(187, "link", "Home")],
            "transitions": [home_link(187)],
        },
        "no_results": {
            "title": "No results",
            "elements": [el(191, "text", "No results found"), el(192, "link", "Home")],
            "transitions": [home_link(192)],
        },
        "no_route": {
            "title": "No route",
            "elements": [el(195, "text", "No route found"), el(196, "link", "Home")],
            "transitions": [home_link(196)],
        },
    }
    search = ["fill('101', '{place}')", "click('102')"]
    route = ["click('103')", "fill('158', '{from}')", "fill('163', '{to}')", "select_option('166', '{mode}')", "click('171')"]
    route_derive = [{"lookup": "routes", "key": "{from}|{to}|{mode}", "as": "route"}]
    templates = [
        {"id": "map/find_place", "instruction": "Find {place} on the map.", "slots": {"place": "places"},
         "solution": search + ["stop()"],
         "oracle": {"page": "place", "vars": {"place": "{place}"}}},
        {"id": "map/zip_code", "instruction": "What is the zip code of {place}?", "slots": {"place": "places"},
         "solution": search + ["click('203')", "send_msg_to_user('{place_zip}')"],
         "oracle": {"message_contains": "{place_zip}"}},
        {"id": "map/category", "instruction": "What kind of place is {place}?", "slots": {"place": "places"},
         "solution": search + ["send_msg_to_user('{place_category}')"],
         "oracle": {"message_contains": "{place_category}"}},
        {"id": "map/rating", "instruction": "What is the average rating of {place}?", "slots": {"place": "places"},
         "solution": search + ["click('205')", "send_msg_to_user('{place_rating}')"],
         "oracle": {"message_contains": "{place_rating}"}},
        {"id": "map/distance", "instruction": "How many kilometers is it from {from} to {to} by {mode}?",
         "slots": {"from": "places", "to": "places", "mode": "modes"}, "derive": route_derive,
         "solution": route + ["send_msg_to_user('{route_distance}')"],
         "oracle": {"message_contains": "{route_distance}"}},
        {"id": "map/travel_time", "instruction": "How many minutes does it take to get from {from} to {to} by {mode}?",
         "slots": {"from": "places", "to": "places", "mode": "modes"}, "derive": route_derive,
         "solution": route + ["click('184')", "send_msg_to_user('{route_time}')"],
         "oracle": {"message_contains": "{route_time}"}},
    ]
    return {
        "name": "map",
        "start_page": "home",
        "tables": {"places": places, "routes": routes(), "modes": {m: {} for m in MODES}},
        "pages": pages,
        "templates": templates,
    }


# ---------------------------------------------------------------- shopping

PRODUCTS = {
    "Ceramic Coffee Mug": ("mug", "12.99"),
    "Travel Mug": ("mug", "18.50"),
    "Enamel Camping Mug": ("mug", "9.75"),
    "Wireless Mouse": ("mouse", "24.99"),
    "Gaming Mouse": ("mouse", "59.00"),
    "Vertical Ergonomic Mouse": ("mouse", "39.90"),
    "Mechanical Keyboard": ("keyboard", "89.00"),
    "Compact Keyboard": ("keyboard", "34.50"),
    "Yoga Mat": ("mat", "21.00"),
    "Cork Yoga Mat": ("mat", "45.00"),
    "Desk Mat": ("mat", "15.25"),
    "Stainless Water Bottle": ("bottle", "19.99"),
    "Glass Water Bottle": ("bottle", "14.49"),
}
CATEGORY_WORDS = {"mug": "Mug", "mouse": "Mouse", "keyboard": "Keyboard", "mat": "Mat", "bottle": "Bottle"}


def shopping_site():
    products = {k: {"category": c, "price": p} for k, (c, p) in PRODUCTS.items()}
    categories = {}
    for cat, word in CATEGORY_WORDS.items():
        members = [(float(p), k) for k, (c, p) in PRODUCTS.items() if word in k]
        lo, hi = min(members), max(members)
        categories[word] = {
            "min_name": lo[1], "min_price": PRODUCTS[lo[1]][1],
            "max_name": hi[1], "max_price": PRODUCTS[hi[1]][1],
        }
    search = [{"filter": "products", "contains": "{@301}", "as": "results"},
              {"set": "query", "to": "{@301}"},
              {"head": "results", "table": "products", "as": "first"}]
    sort = lambda by, desc: [{"sort": "results", "table": "products", "by": by, "desc": desc},
                             {"head": "results", "table": "products", "as": "first"}]
    pages = {
        "home": {
            "title": "One Stop Market",
            "elements": [el(301, "textbox", "Search products"), el(302, "button", "Search"), el(303, "link", "Cart")],
            "transitions": [
                tr(302, "click", "results", search, fallback="no_results"),
                tr(301, "press", "results", search, value="Enter", fallback="no_results"),
                tr(303, "click", "cart"),
            ],
        },
        "results": {
            "title": "Search results",
            "elements": [
                el(311, "text", "Results for: {query}"),
                el(312, "option", "Sort by", options=["Relevance", "Price: low to high", "Price: high to low"], value="Relevance"),
                el(313, "link", "{first}"),
                el(314, "text", "Price: {first_price}"),
                el(315, "link", "Home"),
            ],
            "transitions": [
                tr(312, "select_option", "results", sort("price", False), value="Price: low to high"),
                tr(312, "select_option", "results", sort("price", True), value="Price: high to low"),
                tr(312, "select_option", "results", sort(None, False), value="Relevance"),
                tr(313, "click", "product", [{"lookup": "products", "key": "{first}", "as": "product"}]),
                home_link(315),
            ],
        },
        "product": {
            "title": "{product}",
            "elements": [
                el(321, "text", "Product: {product}"),
                el(322, "text", "Price: {product_price}"),
                el(323, "button", "Add to cart"),
                el(324, "link", "Cart"),
                el(325, "link", "Home"),
            ],
            "transitions": [
                tr(323, "click", "added", [{"append": "cart", "value": "{product}"}]),
                tr(324, "click", "cart"),
                home_link(325),
            ],
        },
        "added": {
            "title": "Cart updated",
            "elements": [el(331, "text", "Added {product} to cart"), el(332, "link", "Cart"), el(333, "link", "Home")],
            "transitions": [tr(332, "click", "cart"), home_link(333)],
        },
        "cart": {
            "title": "Shopping cart",
            "elements": [el(341, "text", "Items in cart: {cart_count}"), el(342, "link", "Home")],
            "transitions": [home_link(342)],
        },
        "no_results": {
            "title": "No results",
            "elements": [el(351, "text", "No products found"), el(352, "link", "Home")],
            "transitions": [home_link(352)],
        },
    }
    search_steps = lambda slot: [f"fill('301', '{{{slot}}}')", "click('302')"]
    templates = [
        {"id": "shopping/search", "instruction": "Show me the search results for {category}.",
         "slots": {"category": "categories"},
         "solution": search_steps("category") + ["stop()"],
         "oracle": {"page": "results", "vars": {"query": "{category}"}}},
        {"id": "shopping/cheapest_price", "instruction": "What is the price of the cheapest {category}?",
         "slots": {"category": "categories"},
         "solution": search_steps("category") + ["select_option('312', 'Price: low to high')", "send_msg_to_user('{category_min_price}')"],
         "oracle": {"message_contains": "{category_min_price}"}},
        {"id": "shopping/priciest_name", "instruction": "Which {category} is the most expensive?",
         "slots": {"category": "categories"},
         "solution": search_steps("category") + ["select_option('312', 'Price: high to low')", "send_msg_to_user('{category_max_name}')"],
         "oracle": {"message_contains": "{category_max_name}"}},
        {"id": "shopping/product_price", "instruction": "How much does the {product} cost?",
         "slots": {"product": "products"},
         "solution": search_steps("product") + ["send_msg_to_user('{product_price}')"],
         "oracle": {"message_contains": "{product_price}"}},
        {"id": "shopping/add_to_cart", "instruction": "Add the {product} to my cart.",
         "slots": {"product": "products"},
         "solution": search_steps("product") + ["click('313')", "click('323')", "stop()"],
         "oracle": {"list_contains": {"cart": "{product}"}}},
        {"id": "shopping/add_cheapest", "instruction": "Put the cheapest {category} in my cart.",
         "slots": {"category": "categories"},
         "solution": search_steps("category") + ["select_option('312', 'Price: low to high')", "click('313')", "click('323')", "stop()"],
         "oracle": {"list_contains": {"cart": "{category_min_name}"}}},
    ]
    return {
        "name": "shopping",
        "start_page": "home",
        "tables": {"products": products, "categories": categories},
        "pages": pages,
        "templates": templates,
    }


# ------------------------------------------------------------------ reddit

FORUMS = {
    "books": {"link": "411", "top": "Favorite novels of the decade", "members": "5120"},
    "movies": {"link": "412", "top": "Underrated sci-fi films", "members": "8342"},
    "gaming": {"link": "413", "top": "Best co-op games for two", "members": "12093"},
    "science": {"link": "414", "top": "New exoplanet discovered", "members": "7781"},
    "music": {"link": "415", "top": "Albums that changed your life", "members": "6604"},
}
POSTS = {
    "Looking for recommendations": {"body": "Any suggestions welcome"},
    "Weekly discussion thread": {"body": "Share what you are into this week"},
    "First time poster": {"body": "Hello from a long time lurker"},
    "Question about the rules": {"body": "Are cross posts allowed here"},
}


def reddit_site():
    forum_links = [el(int(row["link"]), "link", name) for name, row in FORUMS.items()]
    forum_transitions = [
        tr(int(row["link"]), "click", "forum", [{"lookup": "forums", "key": name, "as": "forum"}])
        for name, row in FORUMS.items()
    ]
    pages = {
        "home": {
            "title": "Postmill",
            "elements": [el(401, "link", "Forums"), el(402, "link", "Subscriptions")],
            "transitions": [tr(401, "click", "forums"), tr(402, "click", "subscriptions")],
        },
        "forums": {
            "title": "List of forums",
            "elements": forum_links + [el(419, "link", "Home")],
            "transitions": forum_transitions + [home_link(419)],
        },
        "forum": {
            "title": "/f/{forum}",
            "elements": [
                el(421, "text", "Forum: {forum}"),
                el(422, "text", "Top post: {forum_top}"),
                el(424, "button", "New post"),
                el(425, "button", "Subscribe"),
                el(427, "link", "About"),
                el(426, "link", "Forums"),
            ],
            "transitions": [
                tr(424, "click", "new_post"),
                tr(425, "click", "subscribed", [{"append": "subscriptions", "value": "{forum}"}]),
                tr(427, "click", "about"),
                tr(426, "click", "forums"),
            ],
        },
        "about": {
            "title": "About /f/{forum}",
            "elements": [el(428, "text", "Members: {forum_members}"), el(429, "link", "Forums")],
            "transitions": [tr(429, "click", "forums")],
        },
        "new_post": {
            "title": "Submit to /f/{forum}",
            "elements": [el(431, "textbox", "Title"), el(432, "textbox", "Body"), el(433, "button", "Submit"), el(434, "link", "Cancel")],
            "transitions": [
                tr(433, "click", "posted", [{"append": "posts", "value": "{forum}: {@431}"},
                                            {"set": "last_body", "to": "{@432}"}]),
                tr(434, "click", "forum"),
            ],
        },
        "posted": {
            "title": "Submission created",
            "elements": [el(441, "text", "Your post was published in {forum}"), el(442, "link", "Forums")],
            "transitions": [tr(442, "click", "forums")],
        },
        "subscribed": {
            "title": "Subscribed",
            "elements": [el(451, "text", "Subscribed to {forum}"), el(452, "link", "Forums")],
            "transitions": [tr(452, "click", "forums")],
        },
        "subscriptions": {
            "title": "Your subscriptions",
            "elements": [el(461, "text", "Subscriptions: {subscriptions_count}"), el(462, "link", "Home")],
            "transitions": [home_link(462)],
        },
    }
    open_forum = ["click('401')", "click('{forum_link}')"]
    templates = [
        {"id": "reddit/open_forum", "instruction": "Open the {forum} forum.", "slots": {"forum": "forums"},
         "solution": open_forum + ["stop()"],
         "oracle": {"page": "forum", "vars": {"forum": "{forum}"}}},
        {"id": "reddit/top_post", "instruction": "What is the top post in the {forum} forum?", "slots": {"forum": "forums"},
         "solution": open_forum + ["send_msg_to_user('{forum_top}')"],
         "oracle": {"message_contains": "{forum_top}"}},
        {"id": "reddit/members", "instruction": "How many members does the {forum} forum have?", "slots": {"forum": "forums"},
         "solution": open_forum + ["click('427')", "send_msg_to_user('{forum_members}')"],
         "oracle": {"message_contains": "{forum_members}"}},
        {"id": "reddit/subscribe", "instruction": "Subscribe to the {forum} forum.", "slots": {"forum": "forums"},
         "solution": open_forum + ["click('425')", "stop()"],
         "oracle": {"list_contains": {"subscriptions": "{forum}"}}},
        {"id": "reddit/create_post",
         "instruction": "Create a post titled '{post}' with the body '{post_body}' in the {forum} forum.",
         "slots": {"post": "posts", "forum": "forums"},
         "solution": open_forum + ["click('424')", "fill('431', '{post}')", "fill('432', '{post_body}')", "click('433')", "stop()"],
         "oracle": {"list_contains": {"posts": "{forum}: {post}"}}},
    ]
    return {
        "name": "reddit",
        "start_page": "home",
        "tables": {"forums": FORUMS, "posts": POSTS},
        "pages": pages,
        "templates": templates,
    }


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    for site in (map_site(), shopping_site(), reddit_site()):
        path = OUT / f"{site['name']}.json"
        path.write_text(json.dumps(site, indent=1, ensure_ascii=False) + "\n", encoding="utf-8")
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
