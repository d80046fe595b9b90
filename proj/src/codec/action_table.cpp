#include "gwm/codec.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gwm::codec {

ActionTable pool_actions(const ActionTable& in, int f) {
    if (f < 1) throw std::invalid_argument("pool target < 1");
    const size_t t = in.frames();
    if (t == 0) throw std::invalid_argument("empty action table");
    ActionTable out;
    out.rows.resize(size_t(f));
    for (int i = 0; i < f; ++i) {
        size_t lo = size_t(i) * t / size_t(f);                       // floor
        size_t hi = (size_t(i + 1) * t + size_t(f) - 1) / size_t(f); // ceil
        if (hi > t) hi = t;
        ButtonVector acc;
        for (size_t r = lo; r < hi; ++r) acc = acc | in.rows[r];
        out.rows[size_t(i)] = acc;
    }
    return out;
}

std::array<double, usable_button_count> usable_bits(ButtonVector bv) {
    std::array<double, usable_button_count> out{};
    for (int i = 0; i < usable_button_count; ++i)
        out[size_t(i)] = bv.get(Button(i)) ? 1.0 : 0.0;
    return out;
}

void write_actions_csv(std::ostream& os, const ActionTable& t) {
    os << "frame";
    for (const char* n : button_names) os << ',' << n;
    os << '\n';
    for (size_t r = 0; r < t.rows.size(); ++r) {
        os << r;
        for (int b = 0; b < button_count; ++b)
            os << ',' << (t.rows[r].get(Button(b)) ? 1 : 0);
        os << '\n';
    }
}

ActionTable read_actions_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("actions csv: empty");
    {
        std::ostringstream expect;
        expect << "frame";
        for (const char* n : button_names) expect << ',' << n;
        if (line != expect.str()) throw std::runtime_error("actions csv: bad header: " + line);
    }
    ActionTable t;
    size_t expect_frame = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string cell;
        if (!std::getline(ls, cell, ',')) throw std::runtime_error("actions csv: bad row");
        if (std::stoull(cell) != expect_frame)
            throw std::runtime_error("actions csv: frame numbers not contiguous");
        ButtonVector bv;
        for (int b = 0; b < button_count; ++b) {
            if (!std::getline(ls, cell, ','))
                throw std::runtime_error("actions csv: short row");
            if (cell == "1") bv.set(Button(b));
            else if (cell != "0") throw std::runtime_error("actions csv: cell not 0/1: " + cell);
        }
        if (std::getline(ls, cell, ','))
            throw std::runtime_error("actions csv: long row");
        t.rows.push_back(bv);
        ++expect_frame;
    }
    return t;
}

} // namespace gwm::codec
