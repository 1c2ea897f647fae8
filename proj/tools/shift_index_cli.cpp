/*
   Copyright 2026 The shift-index Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

// shift-index: generate | bench | sweep-m | tune | inspect

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "shift_index/bench.hpp"
#include "shift_index/cost.hpp"
#include "shift_index/data_io.hpp"
#include "shift_index/models.hpp"
#include "shift_index/shift_table.hpp"

namespace si = shift_index;

namespace {

const std::vector<std::string> kFamilies = {"uden", "uspr", "norm", "logn", "clustered_real_like"};
const std::vector<std::string> kModels = {"im", "spline", "rmi2"};
const std::vector<std::string> kTables = {"none", "range", "mid"};
const std::vector<std::string> kWorkloads = {"keys", "range", "mixed"};

// Where the keys come from: a key file, or a generator spec.
struct Source {
    std::string keys;
    std::string family;
    std::size_t n = 1000000;
    unsigned width = 0;  // 0: from the file, or 64 when generating
    std::uint64_t seed = 1;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--keys", keys, "key file to load");
        cmd->add_option("--family", family, "generate keys of this family instead of loading")
            ->check(CLI::IsMember(kFamilies));
        cmd->add_option("--n", n, "number of keys to generate")->check(CLI::PositiveNumber);
        cmd->add_option("--width", width, "key width in bits")->check(CLI::IsMember({32U, 64U}));
        cmd->add_option("--seed", seed, "generator / workload seed");
    }

    [[nodiscard]] unsigned resolved_width() const {
        if (!keys.empty()) {
            const unsigned w = si::key_file_width(keys);
            if (width != 0 && width != w) {
                throw si::BadWidth("--width " + std::to_string(width) + " does not match the " + std::to_string(w) +
                                   "-bit key file");
            }
            return w;
        }
        return width == 0 ? 64 : width;
    }

    [[nodiscard]] std::string label() const {
        if (!keys.empty()) return std::filesystem::path(keys).stem().string();
        return family;
    }

    template <si::KeyType Key>
    si::SortedKeyColumn<Key> load() const {
        if (!keys.empty()) {
            bool sorted = true;
            auto column = si::read_keys<Key>(keys, &sorted);
            if (!sorted) std::cerr << "warning: " << keys << " was not sorted; keys sorted on load\n";
            return column;
        }
        if (family.empty()) throw si::InvalidArgument("give --keys or --family");
        return si::generate<Key>({si::parse_family(family), n, sizeof(Key) * 8, seed});
    }
};

// Runs fn.template operator()<Key>() for the source's key width.
template <class Fn>
int dispatch(const Source& src, Fn&& fn) {
    if (src.resolved_width() == 32) return fn.template operator()<std::uint32_t>();
    return fn.template operator()<std::uint64_t>();
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw si::InvalidArgument("cannot write " + path);
    out << text;
}

void write_blob(const std::string& path, const std::vector<std::byte>& blob) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw si::InvalidArgument("cannot write " + path);
    out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

std::vector<std::byte> read_blob(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw si::InvalidArgument("cannot read " + path);
    std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::vector<std::byte> out(raw.size());
    std::memcpy(out.data(), raw.data(), raw.size());
    return out;
}

std::vector<double> parse_ratios(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        const double v = std::stod(item, &used);
        if (used != item.size() || !(v >= 1.0)) throw si::InvalidArgument("bad ratio '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw si::InvalidArgument("--ratios is empty");
    return out;
}

struct Common {
    std::string model = "im";
    std::string table = "range";
    double m_ratio = 1.0;
    std::string workload = "keys";
    std::size_t threshold = 8;
    std::size_t lookups = 100000;
    std::size_t warmup = 10000;
    unsigned repetitions = 3;
    std::string csv;

    void add_model(CLI::App* cmd) {
        cmd->add_option("--model", model, "im, spline or rmi2")->check(CLI::IsMember(kModels));
    }
    void add_timing(CLI::App* cmd) {
        cmd->add_option("--workload", workload, "keys, range or mixed")->check(CLI::IsMember(kWorkloads));
        cmd->add_option("--threshold", threshold, "linear/binary last-mile threshold")->check(CLI::PositiveNumber);
        cmd->add_option("--lookups", lookups, "timed lookups per repetition")->check(CLI::PositiveNumber);
        cmd->add_option("--warmup", warmup, "untimed warm-up lookups");
        cmd->add_option("--repetitions", repetitions, "timed repetitions; the fastest is reported")
            ->check(CLI::PositiveNumber);
    }

    [[nodiscard]] si::BenchConfig config(const Source& src) const {
        si::BenchConfig c;
        c.dataset = src.label();
        c.model = si::parse_model_kind(model);
        c.table = si::parse_table_choice(table);
        c.m_ratio = m_ratio;
        c.workload = si::parse_workload(workload);
        c.lookups = lookups;
        c.warmup = warmup;
        c.repetitions = repetitions;
        c.search.linear_to_binary_threshold = threshold;
        c.seed = src.seed;
        return c;
    }
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Learned-index correction layer: data generation, benchmarks and tuning"};
    app.require_subcommand(1);

    // generate
    Source gen_src;
    std::string gen_out;
    auto* gen = app.add_subcommand("generate", "write a synthetic key file");
    gen->add_option("--family", gen_src.family, "uden, uspr, norm, logn or clustered_real_like")
        ->required()
        ->check(CLI::IsMember(kFamilies));
    gen->add_option("--n", gen_src.n, "number of keys")->required()->check(CLI::PositiveNumber);
    gen->add_option("--width", gen_src.width, "key width in bits")->check(CLI::IsMember({32U, 64U}));
    gen->add_option("--seed", gen_src.seed, "generator seed");
    gen->add_option("--out", gen_out, "output key file")->required();

    // bench
    Source bench_src;
    Common bench_opts;
    std::string save_model;
    std::string save_table;
    unsigned readers = 0;
    bool no_baselines = false;
    auto* bench = app.add_subcommand("bench", "time lookups for one configuration and the baselines");
    bench_src.add_to(bench);
    bench_opts.add_model(bench);
    bench->add_option("--table", bench_opts.table, "none, range or mid")->check(CLI::IsMember(kTables));
    bench->add_option("--m-ratio", bench_opts.m_ratio, "keys per table entry")->check(CLI::Range(1.0, 1e18));
    bench_opts.add_timing(bench);
    bench->add_option("--csv", bench_opts.csv, "write CSV here instead of stdout");
    bench->add_option("--save-model", save_model, "write the fitted model blob");
    bench->add_option("--save-table", save_table, "write the built table blob");
    bench->add_option("--readers", readers, "also report throughput with this many reader threads");
    bench->add_flag("--no-baselines", no_baselines, "skip the bs and is rows");

    // sweep-m
    Source sweep_src;
    Common sweep_opts;
    std::string ratios = "1,2,4,8,16,32,64,128,256,512,1024";
    auto* sweep = app.add_subcommand("sweep-m", "table size sweep: R-1, R-X and S-X rows");
    sweep_src.add_to(sweep);
    sweep_opts.add_model(sweep);
    sweep->add_option("--ratios", ratios, "comma-separated keys-per-entry ratios");
    sweep_opts.add_timing(sweep);
    sweep->add_option("--csv", sweep_opts.csv, "write CSV here instead of stdout");

    // tune
    Source tune_src;
    Common tune_opts;
    std::size_t curve_queries = 20000;
    std::string save_profile;
    auto* tune = app.add_subcommand("tune", "decide whether the correction layer pays off");
    tune_src.add_to(tune);
    tune_opts.add_model(tune);
    tune_opts.add_timing(tune);
    tune->add_option("--curve-queries", curve_queries, "queries per window size in the latency curve")
        ->check(CLI::PositiveNumber);
    tune->add_option("--save-profile", save_profile, "write the cost profile CSV");

    // inspect
    std::string inspect_keys;
    std::string inspect_table;
    std::string inspect_model;
    auto* inspect = app.add_subcommand("inspect", "describe a key file, table blob or model blob");
    inspect->add_option("--keys", inspect_keys, "key file");
    inspect->add_option("--table", inspect_table, "table blob");
    inspect->add_option("--model", inspect_model, "model blob");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            const unsigned width = gen_src.width == 0 ? 64 : gen_src.width;
            si::DatasetSpec spec{si::parse_family(gen_src.family), gen_src.n, width, gen_src.seed};
            if (width == 32) {
                si::write_keys(gen_out, si::generate<std::uint32_t>(spec));
            } else {
                si::write_keys(gen_out, si::generate<std::uint64_t>(spec));
            }
            return 0;
        }

        if (bench->parsed()) {
            return dispatch(bench_src, [&]<si::KeyType Key>() {
                si::pin_current_thread();
                const auto column = bench_src.load<Key>();
                auto config = bench_opts.config(bench_src);
                config.baselines = !no_baselines;
                const auto queries = si::make_workload(column, config.lookups, config.workload, config.seed);
                const auto index = si::build_index(column, config.model, config.table, config.m_ratio, config.params);
                std::vector<si::BenchRow> rows{si::bench_index<Key>(index, column, queries, config)};
                if (config.baselines) {
                    auto base = si::run_baselines<Key>(column, queries, config);
                    rows.insert(rows.end(), base.begin(), base.end());
                }
                std::string out = si::bench_csv(rows);
                if (readers > 0) {
                    const double tput = si::run_throughput(index, column, std::span<const Key>(queries), readers,
                                                           config.search);
                    std::ostringstream s;
                    s << "# throughput readers=" << readers << " lookups_per_s=" << tput << "\n";
                    out += s.str();
                }
                write_output(bench_opts.csv, out);
                if (!save_model.empty()) write_blob(save_model, si::encode_model(index.model));
                if (!save_table.empty()) {
                    if (const auto* r = std::get_if<si::RangeTable>(&index.table)) {
                        write_blob(save_table, r->serialize());
                    } else if (const auto* m = std::get_if<si::MidTable>(&index.table)) {
                        write_blob(save_table, m->serialize());
                    } else {
                        throw si::InvalidArgument("--save-table needs --table range or mid");
                    }
                }
                return 0;
            });
        }

        if (sweep->parsed()) {
            const auto list = parse_ratios(ratios);
            return dispatch(sweep_src, [&]<si::KeyType Key>() {
                si::pin_current_thread();
                const auto column = sweep_src.load<Key>();
                const auto config = sweep_opts.config(sweep_src);
                write_output(sweep_opts.csv, si::bench_csv(si::run_sweep(column, std::span<const double>(list), config)));
                return 0;
            });
        }

        if (tune->parsed()) {
            return dispatch(tune_src, [&]<si::KeyType Key>() {
                si::pin_current_thread();
                const auto column = tune_src.load<Key>();
                si::TuneConfig config;
                config.bench = tune_opts.config(tune_src);
                config.curve_queries = curve_queries;
                std::optional<si::CostProfile> profile;
                if (const char* env = std::getenv("SHIFT_INDEX_PROFILE"); env != nullptr && *env != '\0') {
                    if (std::filesystem::exists(env)) {
                        profile = si::CostProfile::load(env);
                        std::cout << "profile: " << env << "\n";
                    } else {
                        std::cerr << "warning: SHIFT_INDEX_PROFILE=" << env << " does not exist; measuring\n";
                    }
                }
                const auto report = si::run_tune(column, config, profile);
                std::cout << si::format_tune_report(report);
                if (!save_profile.empty()) report.profile.save(save_profile);
                return 0;
            });
        }

        if (inspect->parsed()) {
            if (inspect_keys.empty() && inspect_table.empty() && inspect_model.empty()) {
                std::cerr << "inspect: give --keys, --table or --model\n";
                return 2;
            }
            if (!inspect_keys.empty()) {
                Source src;
                src.keys = inspect_keys;
                dispatch(src, [&]<si::KeyType Key>() {
                    bool sorted = true;
                    const auto column = si::read_keys<Key>(inspect_keys, &sorted);
                    std::size_t dups = 0;
                    for (std::size_t i = 1; i < column.size(); ++i) dups += column[i] == column[i - 1];
                    std::cout << "keys: " << column.size() << "\nwidth: " << sizeof(Key) * 8
                              << "\nmin: " << column.min_key() << "\nmax: " << column.max_key()
                              << "\nsorted on disk: " << (sorted ? "yes" : "no") << "\nduplicates: " << dups << "\n";
                    return 0;
                });
            }
            if (!inspect_table.empty()) {
                const auto blob = read_blob(inspect_table);
                if (si::peek_table_mode(blob) == si::TableMode::kRange) {
                    const auto t = si::RangeTable::deserialize(blob);
                    std::cout << "table: range\nm: " << t.size() << "\nn: " << t.key_count()
                              << "\nentry bits: " << t.entry_bits() << "\nbytes: " << t.bytes() << "\ncounts: "
                              << (t.count_meaning() == si::CountMeaning::kCardinality ? "cardinality" : "max-offset")
                              << "\nexact windows: " << (t.exact_windows() ? "yes" : "no") << "\n";
                } else {
                    const auto t = si::MidTable::deserialize(blob);
                    std::cout << "table: mid\nm: " << t.size() << "\nn: " << t.key_count()
                              << "\nentry bits: " << t.entry_bits() << "\nbytes: " << t.bytes() << "\n";
                }
            }
            if (!inspect_model.empty()) {
                const auto blob = read_blob(inspect_model);
                const unsigned bits = si::model_blob_key_bits(blob);
                auto describe = [&]<si::KeyType Key>() {
                    const auto model = si::decode_model<Key>(blob);
                    std::cout << "model: " << si::model_kind_name(si::kind_of(model)) << "\nkey bits: " << bits
                              << "\nbytes: " << si::model_bytes(model) << "\n";
                };
                if (bits == 32) {
                    describe.template operator()<std::uint32_t>();
                } else {
                    describe.template operator()<std::uint64_t>();
                }
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
