"""The three cross-chain verification flows under the finality model.

Run: python demos/04_multichain_flows.py
"""

from stateproof.hashing import keccak256
from stateproof.sim import (
    FinalityStatus,
    NetworkConfig,
    SimWorld,
    verify_l1_on_l2,
    verify_l2_on_l1,
    verify_l2_on_l2,
)

configs = [
    NetworkConfig(chain_id="l1", layer="L1", block_time_seconds=12,
                  l1_finality_delay_seconds=780),
    NetworkConfig(chain_id="opt", layer="L2", block_time_seconds=2, parent_chain_id="l1",
                  state_update_interval_seconds=1800, challenge_period_seconds=604_800,
                  bridge_push_interval_seconds=600),
    NetworkConfig(chain_id="zkr", layer="L2", block_time_seconds=2, parent_chain_id="l1",
                  state_update_interval_seconds=1800, challenge_period_seconds=604_800,
                  bridge_push_interval_seconds=600),
]

world = SimWorld(configs)
contract = bytes(range(20))
slot = keccak256(b"message")
value = keccak256(b"hello from the source chain")
world.schedule_write(100, "opt", contract, slot, value)
world.schedule_write(100, "l1", contract, slot, value)
world.advance(3600)

head = lambda cid: world.runtimes[cid].chain.head.number
print(f"after 3600 s: l1 head #{head('l1')}, opt head #{head('opt')}, zkr head #{head('zkr')}")
update = world.state_update_log[0]
print(f"first state update: {update.l2_chain_id} block {update.l2_block_number} "
      f"landed on l1 block {update.l1_block_number} at t={update.time}\n")


def show(title, report):
    verdict = "ACCEPTED" if report.accepted else f"REJECTED ({report.error})"
    print(f"{title}: {verdict}  [finality={report.finality_at_verification.label}]")
    for step in report.steps:
        print(f"    {'ok ' if step.passed else 'FAIL'} {step.name}")
    print()


show("L2 -> L1 (weak policy)",
     verify_l2_on_l1(world, "opt", 50, contract, slot, policy=FinalityStatus.WEAK))

show("L2 -> L1 (objective policy, challenge period still open)",
     verify_l2_on_l1(world, "opt", 50, contract, slot, policy=FinalityStatus.OBJECTIVE))

show("L1 -> L2 (proof block already bridged)",
     verify_l1_on_l2(world, 9, contract, slot, "opt", policy=FinalityStatus.WEAK))

too_new = head("l1")
show(f"L1 -> L2 (proof block #{too_new} newer than the last bridge push)",
     verify_l1_on_l2(world, too_new, contract, slot, "opt"))

show("L2 -> L2 (composition of the two flows)",
     verify_l2_on_l2(world, "opt", 50, contract, slot, "zkr", policy=FinalityStatus.WEAK))

show("L2 -> L1 with the MMR accumulator instead of the MPT cache",
     verify_l2_on_l1(world, "opt", 50, contract, slot, accumulator="mmr"))
