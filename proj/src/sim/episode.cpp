#include "gwm/sim.hpp"

namespace gwm::sim {

EpisodeResult run_episode(Engine& eng, Agent& player, Agent& npc, int frames) {
    eng.clear_events();
    EpisodeResult ep;
    ep.variant = eng.variant();
    ep.frames.reserve(size_t(frames));
    ep.states.reserve(size_t(frames));
    for (int t = 0; t < frames; ++t) {
        const ButtonVector pb = player.act(eng.state(), FighterId::player);
        const ButtonVector nb = npc.act(eng.state(), FighterId::npc);
        eng.step(pb, nb);
        ep.player_actions.append(pb);
        ep.npc_actions.append(nb);
        RenderResult r = render(eng.state());
        ep.frames.push_back(std::move(r.frame));
        ep.player_boxes.push_back(r.player_box);
        ep.npc_boxes.push_back(r.npc_box);
        ep.states.push_back(eng.state());
    }
    ep.events = eng.events();
    return ep;
}

} // namespace gwm::sim
