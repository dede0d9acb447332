#include "defkern/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace defkern {

namespace {

constexpr char kMagic[8] = {'D', 'K', 'C', 'K', 'P', 'T', '0', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
    T v;
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw std::runtime_error("checkpoint: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is) {
    const auto n = get<std::uint32_t>(is);
    std::string s(n, '\0');
    is.read(s.data(), n);
    if (!is) throw std::runtime_error("checkpoint: truncated string");
    return s;
}

void put_tensor(std::ostream& os, const Tensor& t) {
    put<std::uint8_t>(os, static_cast<std::uint8_t>(t.rank()));
    for (int d = 0; d < t.rank(); ++d) put<std::int32_t>(os, t.dim(d));
    os.write(reinterpret_cast<const char*>(t.data()),
             static_cast<std::streamsize>(t.size()) * 8);
}

Tensor get_tensor(std::istream& is) {
    const int rank = get<std::uint8_t>(is);
    std::vector<int> shape(static_cast<size_t>(rank));
    for (int d = 0; d < rank; ++d) shape[static_cast<size_t>(d)] = get<std::int32_t>(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size()) * 8);
    if (!is) throw std::runtime_error("checkpoint: truncated tensor data");
    return t;
}

}  // namespace

std::string net_config_to_text(const NetConfig& c) {
    std::ostringstream os;
    os << "mode=" << to_string(c.mode) << '\n'
       << "tau=" << c.tau << '\n'
       << "kh=" << c.kh << '\n'
       << "kw=" << c.kw << '\n'
       << "kt=" << c.kt << '\n'
       << "width_scale=" << std::hexfloat << c.width_scale << '\n'
       << "levels=" << std::dec << c.levels << '\n'
       << "max_disp=" << std::hexfloat << c.max_disp << std::dec << '\n'
       << "blind=" << (c.blind ? 1 : 0) << '\n'
       << "fixed_grid=" << (c.fixed_grid ? 1 : 0) << '\n'
       << "dynamic_weights=" << (c.dynamic_weights ? 1 : 0) << '\n';
    return os.str();
}

NetConfig net_config_from_text(const std::string& text) {
    NetConfig c;
    std::istringstream is(text);
    std::string line;
    // File-sourced content: parse and validation problems (including the
    // invalid_argument raised by stoi or the mode parser) surface as the
    // I/O-class error the loading contract documents.
    try {
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("malformed config line: " + line);
            const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
            if (key == "mode") c.mode = filter_mode_from_string(val);
            else if (key == "tau") c.tau = std::stoi(val);
            else if (key == "kh") c.kh = std::stoi(val);
            else if (key == "kw") c.kw = std::stoi(val);
            else if (key == "kt") c.kt = std::stoi(val);
            else if (key == "width_scale") c.width_scale = std::strtod(val.c_str(), nullptr);
            else if (key == "levels") c.levels = std::stoi(val);
            else if (key == "max_disp") c.max_disp = std::strtod(val.c_str(), nullptr);
            else if (key == "blind") c.blind = val == "1";
            else if (key == "fixed_grid") c.fixed_grid = val == "1";
            else if (key == "dynamic_weights") c.dynamic_weights = val == "1";
            else throw std::invalid_argument("unknown config key " + key);
        }
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error(std::string("checkpoint: invalid config: ") + e.what());
    }
    return c;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    put_string(os, net_config_to_text(ckpt.config));
    put<std::uint64_t>(os, static_cast<std::uint64_t>(ckpt.iteration));

    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.params.size()));
    for (const auto& [name, var] : ckpt.params.items()) {
        put_string(os, name);
        put_tensor(os, var->value);
    }

    put<std::uint64_t>(os, static_cast<std::uint64_t>(ckpt.opt.step));
    put<std::uint32_t>(os, static_cast<std::uint32_t>(ckpt.opt.m.size()));
    for (const auto& [name, m] : ckpt.opt.m) {
        put_string(os, name);
        put_tensor(os, m);
        put_tensor(os, ckpt.opt.v.at(name));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("checkpoint: cannot open: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("checkpoint: bad magic in " + path);

    Checkpoint c;
    c.config = net_config_from_text(get_string(is));
    c.iteration = static_cast<long>(get<std::uint64_t>(is));

    const auto n_params = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_params; ++i) {
        const std::string name = get_string(is);
        c.params.add(name, get_tensor(is));
    }

    c.opt.step = static_cast<long>(get<std::uint64_t>(is));
    const auto n_moments = get<std::uint32_t>(is);
    for (std::uint32_t i = 0; i < n_moments; ++i) {
        const std::string name = get_string(is);
        c.opt.m.emplace(name, get_tensor(is));
        c.opt.v.emplace(name, get_tensor(is));
    }
    return c;
}

}  // namespace defkern
