#include "mimvc/model_io.hpp"

#include "mimvc/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mimvc {

namespace {

static_assert(std::endian::native == std::endian::little, "payload is written in host order");

struct NamedTensor {
    std::string name;
    const Matrix* value;
};

std::vector<NamedTensor> collect(const ModelState& s) {
    std::vector<NamedTensor> out;
    const auto names = parameter_names(s.model);
    const auto params = parameter_tensors(s.model);
    const auto first = parameter_tensors(s.optimizer.first);
    const auto second = parameter_tensors(s.optimizer.second);
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({names[i], params[i]});
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({"adam.m." + names[i], first[i]});
    for (std::size_t i = 0; i < names.size(); ++i) out.push_back({"adam.v." + names[i], second[i]});
    return out;
}

template <class T>
T expect_field(std::istream& in, const std::string& key) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("model file: truncated header");
    std::istringstream ls(line);
    std::string k;
    T value{};
    if (!(ls >> k >> value) || k != key)
        throw DataError("model file: expected '" + key + "', got '" + line + "'");
    return value;
}

}  // namespace

void save_model_state(const ModelState& state, const std::filesystem::path& file) {
    const auto tensors = collect(state);
    const auto tmp = file.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw DataError("cannot write " + tmp);
        out << "mimvc-model " << kModelFormatVersion << '\n'
            << "seed " << state.seed << '\n'
            << "epoch " << state.epoch << '\n'
            << "step " << state.optimizer.step << '\n'
            << "use_bias " << (state.model.use_bias ? 1 : 0) << '\n'
            << "views " << state.model.num_views() << '\n'
            << "tensors " << tensors.size() << '\n';
        for (const auto& t : tensors)
            out << t.name << ' ' << t.value->rows() << ' ' << t.value->cols() << '\n';
        out << "end\n";
        for (const auto& t : tensors)
            out.write(reinterpret_cast<const char*>(t.value->data()),
                      static_cast<std::streamsize>(t.value->size() * sizeof(double)));
        if (!out) throw DataError("failed writing " + tmp);
    }
    std::filesystem::rename(tmp, file);
}

ModelState load_model_state(const std::filesystem::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw DataError("cannot open model file " + file.string());
    const int version = expect_field<int>(in, "mimvc-model");
    if (version != kModelFormatVersion)
        throw DataError("model file: unsupported format version " + std::to_string(version));

    ModelState s;
    s.seed = expect_field<std::uint64_t>(in, "seed");
    s.epoch = expect_field<int>(in, "epoch");
    s.optimizer.step = expect_field<long>(in, "step");
    s.model.use_bias = expect_field<int>(in, "use_bias") != 0;
    const auto views = expect_field<std::size_t>(in, "views");
    const auto count = expect_field<std::size_t>(in, "tensors");

    std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> header;
    for (std::size_t i = 0; i < count; ++i) {
        std::string line;
        if (!std::getline(in, line)) throw DataError("model file: truncated tensor table");
        std::istringstream ls(line);
        std::string name;
        Eigen::Index r = 0, c = 0;
        if (!(ls >> name >> r >> c) || r < 0 || c < 0)
            throw DataError("model file: bad tensor line '" + line + "'");
        header.push_back({name, {r, c}});
    }
    std::string end;
    if (!std::getline(in, end) || end != "end") throw DataError("model file: missing 'end' marker");

    s.model.encoders.resize(views);
    s.model.decoders.resize(views);
    s.optimizer.first = s.model;
    s.optimizer.second = s.model;
    const auto names = parameter_names(s.model);
    if (count != 3 * names.size())
        throw DataError("model file: tensor count does not match " + std::to_string(views) +
                        " views");
    std::vector<Matrix*> targets;
    for (auto* t : parameter_tensors(s.model)) targets.push_back(t);
    for (auto* t : parameter_tensors(s.optimizer.first)) targets.push_back(t);
    for (auto* t : parameter_tensors(s.optimizer.second)) targets.push_back(t);

    for (std::size_t i = 0; i < count; ++i) {
        const auto& expected = i < names.size()       ? names[i]
                               : i < 2 * names.size() ? "adam.m." + names[i - names.size()]
                                                      : "adam.v." + names[i - 2 * names.size()];
        if (header[i].first != expected)
            throw DataError("model file: expected tensor '" + expected + "', found '" +
                            header[i].first + "'");
        auto& m = *targets[i];
        m.resize(header[i].second.first, header[i].second.second);
        in.read(reinterpret_cast<char*>(m.data()),
                static_cast<std::streamsize>(m.size() * sizeof(double)));
        if (!in) throw DataError("model file: truncated payload at '" + header[i].first + "'");
    }
    s.optimizer.first.use_bias = s.optimizer.second.use_bias = s.model.use_bias;
    return s;
}

}  // namespace mimvc
