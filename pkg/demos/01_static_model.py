"""Build a small thinging-machine model, validate it and render it as DOT.

Then do the same for the built-in LINA model and look up a few anchors.
Run: python demos/01_static_model.py
"""

from tmlina import anchor_lookup, build_lina_model, build_model, export_dot, validate_model

# A customer creates an order and sends it; the desk receives and processes it.
spec = {
    "thimacs": [{"name": "customer"}, {"name": "desk"}],
    "stages": [
        {"name": "order.create", "kind": "create", "thimac": "customer"},
        {"name": "order.release", "kind": "release", "thimac": "customer"},
        {"name": "order.send", "kind": "transfer", "thimac": "customer"},
        {"name": "order.in", "kind": "transfer", "thimac": "desk"},
        {"name": "order.receive", "kind": "receive", "thimac": "desk"},
        {"name": "order.process", "kind": "process", "thimac": "desk"},
    ],
    "arrows": [
        {"from": "order.create", "to": "order.release"},
        {"from": "order.release", "to": "order.send"},
        {"from": "order.send", "to": "order.in"},
        {"from": "order.in", "to": "order.receive"},
        {"from": "order.receive", "to": "order.process"},
    ],
}

toy = build_model(spec)
print("toy model violations:", validate_model(toy))
print(export_dot(toy))

# Breaking a rule is reported, not raised.
bad = dict(spec, arrows=spec["arrows"] + [{"from": "order.in", "to": "order.release"}])
for v in validate_model(build_model(bad)):
    print("violation:", v.rule, "-", v.message)

lina = build_lina_model()
print(f"\nLINA: {len(lina.stages)} stages, {len(lina.storages)} storages, {len(lina.arrows)} arrows")
for label in (1, 7, 29, 80):
    element = lina.element(anchor_lookup(lina, label))
    print(f"  anchor {label:>2} -> {element.name}")
