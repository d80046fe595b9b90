#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gwm/sim.hpp"

#include <cmath>

using namespace gwm;
using namespace gwm::sim;
using codec::ActionTable;
using codec::ButtonVector;
using codec::GameVariant;

namespace {

ButtonVector keys(std::initializer_list<codec::Button> bs) {
    ButtonVector bv;
    for (auto b : bs) bv.set(b);
    return bv;
}

// Step with player input from `rows`, npc idle (or vice versa).
void run_rows(Engine& eng, const std::vector<ButtonVector>& player_rows,
              const std::vector<ButtonVector>& npc_rows, int frames) {
    for (int t = 0; t < frames; ++t) {
        ButtonVector p = size_t(t) < player_rows.size() ? player_rows[size_t(t)] : ButtonVector{};
        ButtonVector n = size_t(t) < npc_rows.size() ? npc_rows[size_t(t)] : ButtonVector{};
        eng.step(p, n);
    }
}

int count_events(const std::vector<Event>& evs, EventType t) {
    int n = 0;
    for (auto& e : evs)
        if (e.type == t) ++n;
    return n;
}

int count_events(const std::vector<Event>& evs, EventType t, FighterId who) {
    int n = 0;
    for (auto& e : evs)
        if (e.type == t && e.actor == who) ++n;
    return n;
}

const Event* find_event(const std::vector<Event>& evs, EventType t) {
    for (auto& e : evs)
        if (e.type == t) return &e;
    return nullptr;
}

} // namespace

TEST_CASE("walking: speed, walls, step events") {
    Engine eng(GameVariant::game1);
    std::vector<ButtonVector> walk(10, keys({codec::BTN_RIGHT}));
    run_rows(eng, walk, {}, 10);
    CHECK(eng.state().fighter(FighterId::player).x == doctest::Approx(0.30 + 10 * tune::walk_speed));
    CHECK(count_events(eng.events(), EventType::forward_step, FighterId::player) == 1);

    // walls clamp
    Engine w(GameVariant::game1);
    w.reset(0.08, 0.90);
    std::vector<ButtonVector> left(50, keys({codec::BTN_LEFT}));
    run_rows(w, left, {}, 50);
    CHECK(w.state().fighter(FighterId::player).x == tune::wall_left);
    CHECK(count_events(w.events(), EventType::backward_step, FighterId::player) == 1);
}

TEST_CASE("jump: parabola, apex, landing, horizontal carry") {
    Engine eng(GameVariant::game1);
    eng.reset(0.20, 0.80); // room to land without body push-out
    std::vector<ButtonVector> rows = {keys({codec::BTN_UP, codec::BTN_RIGHT})};
    for (int i = 0; i < 30; ++i) rows.push_back(keys({codec::BTN_RIGHT}));

    double peak = 0.0;
    int land_frame = -1;
    for (int t = 0; t < 30; ++t) {
        eng.step(rows[size_t(t)], {});
        peak = std::max(peak, eng.state().fighter(FighterId::player).y);
        if (land_frame < 0 && !eng.state().fighter(FighterId::player).airborne && t > 0)
            land_frame = t;
    }
    CHECK(peak == doctest::Approx(tune::jump_peak));
    CHECK(land_frame == tune::jump_frames - 1);
    CHECK(find_event(eng.events(), EventType::jump_start) != nullptr);
    CHECK(find_event(eng.events(), EventType::land) != nullptr);
    // horizontal carry: 23 moving air frames, then 6 ground frames walk on
    CHECK(eng.state().fighter(FighterId::player).x ==
          doctest::Approx(0.20 + 23 * tune::walk_speed + 6 * tune::walk_speed));
}

TEST_CASE("crouch: posture events and DOWN hold") {
    Engine eng(GameVariant::game1);
    std::vector<ButtonVector> rows(5, keys({codec::BTN_DOWN}));
    rows.resize(8); // release
    run_rows(eng, rows, {}, 8);
    CHECK(count_events(eng.events(), EventType::crouch_start, FighterId::player) == 1);
    CHECK(count_events(eng.events(), EventType::crouch_end, FighterId::player) == 1);
    CHECK(!eng.state().fighter(FighterId::player).crouching);
}

TEST_CASE("light punch: frame data, damage, hit stun") {
    Engine eng(GameVariant::game1);
    eng.reset(0.40, 0.50); // body resolve will hold them at min gap
    eng.step({}, {});
    CHECK(eng.state().distance() == doctest::Approx(tune::body_min_gap));

    eng.clear_events();
    eng.step(keys({codec::BTN_X}), {}); // LP on game1 pad
    const Event* start_ev = find_event(eng.events(), EventType::attack_start);
    REQUIRE(start_ev != nullptr);
    CHECK(start_ev->kind == AttackKind::light_punch);
    const int start_frame = start_ev->frame; // copy: steps below grow the log

    for (int i = 0; i < 10; ++i) eng.step({}, {});
    const Event* hit = find_event(eng.events(), EventType::attack_hit);
    REQUIRE(hit != nullptr);
    CHECK(hit->frame - start_frame == attack_profile(AttackKind::light_punch).startup);
    const Event* dmg = find_event(eng.events(), EventType::damage);
    REQUIRE(dmg != nullptr);
    CHECK(dmg->amount == tune::dmg_light);
    CHECK(dmg->actor == FighterId::npc);
    CHECK(eng.state().fighter(FighterId::npc).health == tune::start_health - tune::dmg_light);
    CHECK(count_events(eng.events(), EventType::knockdown) == 0); // lights don't floor
}

TEST_CASE("attacks whiff out of range") {
    Engine eng(GameVariant::game1); // spawn distance 0.40 > every melee reach
    eng.step(keys({codec::BTN_X}), {});
    for (int i = 0; i < 20; ++i) eng.step({}, {});
    CHECK(count_events(eng.events(), EventType::attack_start) == 1);
    CHECK(count_events(eng.events(), EventType::attack_hit) == 0);
    CHECK(count_events(eng.events(), EventType::damage) == 0);
}

TEST_CASE("heavy attacks knock down; wakeup follows; floored fighters are invulnerable") {
    Engine eng(GameVariant::game1);
    eng.reset(0.40, 0.52);
    eng.step({}, {});
    eng.clear_events();
    eng.step(keys({codec::BTN_Z}), {}); // HP on game1
    for (int i = 0; i < 8; ++i) eng.step({}, {});
    REQUIRE(count_events(eng.events(), EventType::knockdown, FighterId::npc) == 1);
    CHECK(eng.state().fighter(FighterId::npc).knockdown > 0);

    // poke the floored npc: everything whiffs
    eng.clear_events();
    eng.step(keys({codec::BTN_X}), {});
    for (int i = 0; i < 15; ++i) eng.step({}, {});
    CHECK(count_events(eng.events(), EventType::damage) == 0);
    // wakeup fires once the knockdown timer lapses
    for (int i = 0; i < 20; ++i) eng.step({}, {});
    CHECK(count_events(eng.events(), EventType::wakeup, FighterId::npc) == 1);
}

TEST_CASE("blocking: crouch guard and hold-away guard; toward-hold fails") {
    auto attack_once = [](ButtonVector defender_hold, int& damage, int& blocks, int& crouched_blocks) {
        Engine eng(GameVariant::game1);
        eng.reset(0.40, 0.52);
        std::vector<ButtonVector> def(40, defender_hold);
        std::vector<ButtonVector> atk(40);
        // attacker = npc pressing Z (HP): reach 0.215 still covers a defender
        // who spends the startup walking away
        atk[2] = keys({codec::BTN_Z});
        run_rows(eng, def, atk, 40);
        damage = count_events(eng.events(), EventType::damage, FighterId::player);
        blocks = count_events(eng.events(), EventType::attack_block, FighterId::player);
        crouched_blocks = 0;
        for (auto& e : eng.events())
            if (e.type == EventType::attack_block && e.actor == FighterId::player && e.amount == 1)
                ++crouched_blocks;
    };

    int dmg, blk, cblk;
    attack_once(keys({codec::BTN_DOWN}), dmg, blk, cblk);
    CHECK(dmg == 0);
    CHECK(blk == 1);
    CHECK(cblk == 1); // crouching guard

    attack_once(keys({codec::BTN_LEFT}), dmg, blk, cblk); // away from npc on the right
    CHECK(dmg == 0);
    CHECK(blk == 1);
    CHECK(cblk == 0); // standing guard

    attack_once(keys({codec::BTN_RIGHT}), dmg, blk, cblk); // walking in: no guard
    CHECK(dmg == 1);
    CHECK(blk == 0);
}

TEST_CASE("throw: unblockable, short range, knocks down") {
    Engine eng(GameVariant::game1);
    eng.reset(0.40, 0.52);
    std::vector<ButtonVector> def(20, keys({codec::BTN_DOWN})); // crouch guard up
    std::vector<ButtonVector> atk(20);
    atk[1] = keys({codec::BTN_A, codec::BTN_X});
    run_rows(eng, def, atk, 20);
    const Event* start = find_event(eng.events(), EventType::attack_start);
    REQUIRE(start != nullptr);
    CHECK(start->kind == AttackKind::grab);
    CHECK(count_events(eng.events(), EventType::attack_block) == 0);
    const Event* dmg = find_event(eng.events(), EventType::damage);
    REQUIRE(dmg != nullptr);
    CHECK(dmg->amount == tune::dmg_throw);
    CHECK(count_events(eng.events(), EventType::knockdown, FighterId::player) == 1);

    // out of throw range: whiff
    Engine far(GameVariant::game1);
    far.reset(0.40, 0.60);
    std::vector<ButtonVector> atk2(20);
    atk2[1] = keys({codec::BTN_A, codec::BTN_X});
    run_rows(far, {}, atk2, 20);
    CHECK(count_events(far.events(), EventType::damage) == 0);
}

TEST_CASE("special: long reach chord where a heavy whiffs") {
    Engine eng(GameVariant::game1);
    eng.reset(0.40, 0.63); // gap 0.23: > heavy reach, <= special reach
    std::vector<ButtonVector> hp(30);
    hp[0] = keys({codec::BTN_Z});
    run_rows(eng, {}, hp, 30);
    CHECK(count_events(eng.events(), EventType::damage) == 0);

    Engine eng2(GameVariant::game1);
    eng2.reset(0.40, 0.63);
    std::vector<ButtonVector> sp(30);
    sp[0] = keys({codec::BTN_DOWN, codec::BTN_C, codec::BTN_Z});
    run_rows(eng2, {}, sp, 30);
    const Event* start = find_event(eng2.events(), EventType::attack_start);
    REQUIRE(start != nullptr);
    CHECK(start->kind == AttackKind::special);
    const Event* dmg = find_event(eng2.events(), EventType::damage);
    REQUIRE(dmg != nullptr);
    CHECK(dmg->amount == tune::dmg_special);
    CHECK(count_events(eng2.events(), EventType::knockdown, FighterId::player) == 1);
}

TEST_CASE("projectile: launch, travel, hit; crouch-blockable; two-live cap") {
    SUBCASE("hit for 6 on an idle target") {
        Engine eng(GameVariant::game1);
        std::vector<ButtonVector> chord(60);
        chord[0] = keys({codec::BTN_DOWN, codec::BTN_A, codec::BTN_B});
        run_rows(eng, {}, chord, 60);
        const Event* launch = find_event(eng.events(), EventType::projectile_launch);
        REQUIRE(launch != nullptr);
        CHECK(launch->frame == attack_profile(AttackKind::fireball).startup);
        const Event* hit = find_event(eng.events(), EventType::projectile_hit);
        REQUIRE(hit != nullptr);
        CHECK(eng.state().fighter(FighterId::player).health ==
              tune::start_health - tune::dmg_projectile);
    }
    SUBCASE("crouch guard blocks it clean") {
        Engine eng(GameVariant::game1);
        std::vector<ButtonVector> chord(60);
        chord[0] = keys({codec::BTN_DOWN, codec::BTN_A, codec::BTN_B});
        std::vector<ButtonVector> guard(60, keys({codec::BTN_DOWN}));
        run_rows(eng, guard, chord, 60);
        CHECK(count_events(eng.events(), EventType::projectile_block, FighterId::player) == 1);
        CHECK(eng.state().fighter(FighterId::player).health == tune::start_health);
    }
    SUBCASE("never more than two live per owner") {
        Engine eng(GameVariant::game1);
        eng.reset(0.08, 0.92);
        std::vector<ButtonVector> chords(46);
        chords[0] = chords[15] = chords[30] = keys({codec::BTN_DOWN, codec::BTN_A, codec::BTN_B});
        int max_live = 0;
        for (int t = 0; t < 40; ++t) {
            eng.step({}, size_t(t) < chords.size() ? chords[size_t(t)] : ButtonVector{});
            int live = 0;
            for (auto& p : eng.state().projectiles)
                if (p.owner == FighterId::npc) ++live;
            max_live = std::max(max_live, live);
        }
        CHECK(max_live == 2);
        CHECK(count_events(eng.events(), EventType::projectile_launch) == 2); // third refused
    }
}

TEST_CASE("ko: health floors at zero and the fighter stays down") {
    Engine eng(GameVariant::game1);
    eng.reset(0.40, 0.52);
    // loop heavy punches until ko (10 dmg each, 100 health); walk back in
    // after each knockdown since pushback opens the gap
    for (int swing = 0; swing < 14; ++swing) {
        eng.step(keys({codec::BTN_Z}), {});
        for (int i = 0; i < 30; ++i) eng.step({}, {});
        for (int i = 0; i < 12; ++i) eng.step(keys({codec::BTN_RIGHT}), {});
        for (int i = 0; i < 20; ++i) eng.step({}, {});
    }
    CHECK(eng.state().fighter(FighterId::npc).health == 0);
    CHECK(eng.state().fighter(FighterId::npc).knocked_out);
    CHECK(count_events(eng.events(), EventType::ko, FighterId::npc) == 1);
    // stays floored
    for (int i = 0; i < 100; ++i) eng.step({}, {});
    CHECK(eng.state().fighter(FighterId::npc).knockdown > 0);
}

TEST_CASE("bodies never interpenetrate on the ground") {
    Engine eng(GameVariant::game1);
    eng.reset(0.45, 0.55);
    eng.step({}, {});
    CHECK(eng.state().distance() == doctest::Approx(tune::body_min_gap));
    for (int t = 0; t < 40; ++t) {
        eng.step(keys({codec::BTN_RIGHT}), {});
        CHECK(eng.state().distance() >= tune::body_min_gap - 1e-9);
    }
    // walking pushed the pair rightward together
    CHECK(eng.state().fighter(FighterId::npc).x > 0.55);
}

TEST_CASE("jump crossover flips facing after landing") {
    Engine eng(GameVariant::game1);
    eng.reset(0.50, 0.62);
    std::vector<ButtonVector> rows = {keys({codec::BTN_UP, codec::BTN_RIGHT})};
    for (int i = 0; i < 26; ++i) rows.push_back(keys({codec::BTN_RIGHT}));
    run_rows(eng, rows, {}, 27);
    CHECK(eng.state().fighter(FighterId::player).x > eng.state().fighter(FighterId::npc).x);
    CHECK(eng.state().fighter(FighterId::player).facing == -1);
    CHECK(eng.state().fighter(FighterId::npc).facing == 1);
}

TEST_CASE("engine determinism: identical runs, identical bytes") {
    auto run_once = []() {
        Engine eng(GameVariant::game2);
        auto npc = make_policy_agent(PolicyKind::offense, 77);
        auto pl = make_policy_agent(PolicyKind::light_spar, 78);
        return run_episode(eng, *pl, *npc, 44);
    };
    EpisodeResult a = run_once();
    EpisodeResult b = run_once();
    REQUIRE(a.frames.size() == 44);
    CHECK(a.frames.size() == b.frames.size());
    for (size_t i = 0; i < a.frames.size(); ++i) CHECK(a.frames[i] == b.frames[i]);
    CHECK(a.events.size() == b.events.size());
    CHECK(a.player_actions == b.player_actions);
    CHECK(a.npc_actions == b.npc_actions);
}

TEST_CASE("renderer: exact silhouettes and key colours") {
    Engine eng(GameVariant::game1);
    eng.step({}, {});
    RenderResult r = render(eng.state());

    SUBCASE("standing box is 7x16 at the expected spot") {
        CHECK(r.player_box.x1 - r.player_box.x0 + 1 == 7);
        CHECK(r.player_box.y1 - r.player_box.y0 + 1 == 16);
        CHECK(r.player_box.y1 == ground_row);
        CHECK(r.player_box.pixel_count == 9 + 7 * 13);
        const int col = int(std::lround(eng.state().fighter(FighterId::player).x * 63.0));
        CHECK(r.player_box.x0 == col - 3);
        CHECK(r.npc_box.x1 - r.npc_box.x0 + 1 == 7);
    }
    SUBCASE("background colours in place") {
        const uint8_t* sky = r.frame.px(1, 1);
        CHECK(int(sky[0]) == palette::sky.r);
        const uint8_t* floor = r.frame.px(1, ground_row + 2);
        CHECK(int(floor[0]) == palette::floor.r);
        CHECK(int(floor[2]) == palette::floor.b);
    }

    SUBCASE("crouching box is 7x10") {
        Engine c(GameVariant::game1);
        c.step(keys({codec::BTN_DOWN}), {});
        RenderResult rc = render(c.state());
        CHECK(rc.player_box.y1 - rc.player_box.y0 + 1 == 10);
        CHECK(rc.player_box.x1 - rc.player_box.x0 + 1 == 7);
    }
    SUBCASE("knocked down box is 13x4") {
        Engine k(GameVariant::game1);
        k.reset(0.40, 0.52);
        k.step({}, keys({codec::BTN_Z}));
        for (int i = 0; i < 7; ++i) k.step({}, {});
        REQUIRE(k.state().fighter(FighterId::player).knockdown > 0);
        RenderResult rk = render(k.state());
        CHECK(rk.player_box.x1 - rk.player_box.x0 + 1 == 13);
        CHECK(rk.player_box.y1 - rk.player_box.y0 + 1 == 4);
    }
    SUBCASE("active heavy punch silhouette is wider than idle") {
        Engine h(GameVariant::game1);
        h.reset(0.40, 0.80);
        h.step(keys({codec::BTN_Z}), {});
        for (int i = 0; i < attack_profile(AttackKind::heavy_punch).startup; ++i) h.step({}, {});
        RenderResult rh = render(h.state());
        CHECK(rh.player_box.x1 - rh.player_box.x0 + 1 == 7 + 13); // body + limb
    }
    SUBCASE("projectile pixels present and yellow") {
        Engine p(GameVariant::game1);
        std::vector<ButtonVector> chord(8);
        chord[0] = keys({codec::BTN_DOWN, codec::BTN_A, codec::BTN_B});
        run_rows(p, {}, chord, 8);
        REQUIRE(!p.state().projectiles.empty());
        RenderResult rp = render(p.state());
        int yellow = 0;
        for (int y = 0; y < rp.frame.h; ++y)
            for (int x = 0; x < rp.frame.w; ++x) {
                const uint8_t* q = rp.frame.px(x, y);
                if (q[0] == palette::projectile.r && q[1] == palette::projectile.g &&
                    q[2] == palette::projectile.b)
                    ++yellow;
            }
        CHECK(yellow == 9);
    }
    SUBCASE("occlusion: overlapped npc loses pixels, player never does") {
        Engine o(GameVariant::game1);
        o.step({}, {});
        EngineState st = o.state();
        st.fighter(FighterId::npc).x = st.fighter(FighterId::player).x + 0.02;
        RenderResult ro = render(st);
        CHECK(ro.player_box.pixel_count == 9 + 7 * 13);
        CHECK(ro.npc_box.pixel_count < 9 + 7 * 13);
        CHECK(ro.npc_box.pixel_count > 0);
    }
}

TEST_CASE("policies express their strategies") {
    SUBCASE("offense: pressure up close, pure melee") {
        for (uint64_t seed : {1ull, 2ull, 3ull}) {
            Engine eng(GameVariant::game1);
            eng.reset(0.45, 0.65); // offense matchups start near
            auto npc = make_policy_agent(PolicyKind::offense, seed);
            auto pl = make_policy_agent(PolicyKind::light_spar, seed + 100);
            EpisodeResult ep = run_episode(eng, *pl, *npc, 44);
            int close_attacks = 0;
            for (auto& e : ep.events)
                if (e.type == EventType::attack_start && e.actor == FighterId::npc &&
                    e.distance < 0.25)
                    ++close_attacks;
            CHECK(close_attacks >= 2);
            CHECK(count_events(ep.events, EventType::projectile_launch) == 0);
        }
    }
    SUBCASE("control: zones with projectiles, never melee") {
        for (uint64_t seed : {1ull, 2ull, 3ull}) {
            Engine eng(GameVariant::game1);
            auto npc = make_policy_agent(PolicyKind::control, seed);
            auto pl = make_policy_agent(PolicyKind::wander, seed + 100);
            EpisodeResult ep = run_episode(eng, *pl, *npc, 44);
            CHECK(count_events(ep.events, EventType::projectile_launch, FighterId::npc) >= 1);
            int melee = 0;
            for (auto& e : ep.events)
                if (e.type == EventType::attack_start && e.actor == FighterId::npc &&
                    e.kind != AttackKind::fireball)
                    ++melee;
            CHECK(melee == 0);
        }
    }
    SUBCASE("defense: corners up, crouches, never attacks, gets guard events") {
        int seeds_with_blocks = 0;
        for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
            Engine eng(GameVariant::game1);
            eng.reset(0.50, 0.75); // defense matchups start closer
            auto npc = make_policy_agent(PolicyKind::defense, seed);
            auto pl = make_policy_agent(PolicyKind::aggress, seed + 100);
            EpisodeResult ep = run_episode(eng, *pl, *npc, 44);
            CHECK(count_events(ep.events, EventType::attack_start, FighterId::npc) == 0);
            const double x = ep.states.back().fighter(FighterId::npc).x;
            CHECK((x < 0.15 || x > 0.85));
            int crouch_frames = 0;
            for (auto& st : ep.states)
                if (st.fighter(FighterId::npc).crouching) ++crouch_frames;
            CHECK(crouch_frames > 10);
            if (count_events(ep.events, EventType::attack_block, FighterId::npc) +
                    count_events(ep.events, EventType::damage, FighterId::npc) >
                0)
                ++seeds_with_blocks;
        }
        CHECK(seeds_with_blocks >= 4);
    }
}

TEST_CASE("scripted agent plays a table then idles") {
    Engine eng(GameVariant::game1);
    auto jump = make_scripted_agent(
        codec::ActionTable{codec::behavior_buttons(GameVariant::game1, codec::Behavior::jump_right, 10)});
    auto idle = make_policy_agent(PolicyKind::idle, 0);
    EpisodeResult ep = run_episode(eng, *jump, *idle, 41);
    CHECK(find_event(ep.events, EventType::jump_start) != nullptr);
    CHECK(find_event(ep.events, EventType::land) != nullptr);
    CHECK(ep.states.back().fighter(FighterId::player).x > 0.30);
}
