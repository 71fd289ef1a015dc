#pragma once

#include "uesr/rng.hpp"
#include "uesr/warehouse.hpp"

namespace scenarios {

// 5x5 map: shelf homes (1,1),(1,2),(3,1),(3,2); goal (2,4).
uesr::GridLayout mini_layout();
// Two agents, two requests, one obstacle moved every 3 steps.
uesr::WarehouseConfig mini_config();

// Random but valid mini-layout state: shelves scattered over the homes,
// some carried, random request/return flags, random clock phase.
uesr::WarehouseState random_mini_state(uesr::Rng& gen);

// Random action, biased towards moves and pickups.
uesr::Action random_action(uesr::Rng& gen);

}  // namespace scenarios
