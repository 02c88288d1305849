// Operator / clinician command-line client: corpus generation, study ingest,
// federated queries, analysis jobs, catalogue inspection.
//
// Exit codes: 0 success, 1 user error (malformed input, consent, conflicts),
// 2 environment error (connection/IO), 3 degraded success (PartialResult).

#include <CLI11.hpp>
#include <atomic>
#include <iostream>
#include <mutex>
#include <random>
#include <thread>

#include "mfed/corpus.hpp"
#include "mfed/errors.hpp"
#include "mfed/mediator.hpp"
#include "mfed/node.hpp"
#include "mfed/rpc.hpp"
#include "mfed/sha256.hpp"

using nlohmann::json;
using namespace mfed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitEnv = 2;
constexpr int kExitPartial = 3;

struct Cli {
    std::string node_address;
    std::string token_path;
    std::string format = "table";
    int jobs = 1;
    bool explain = false;
};

proto::AuthToken load_token(const std::string& path) {
    if (path.empty()) throw err_malformed("--token <file> is required for this command");
    json j = json::parse(util::read_text_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("node_id"))
        throw err_malformed("token file needs {\"node_id\", \"secret\"}");
    if (j.contains("secret"))
        return proto::AuthToken::from_secret(j["node_id"].get<std::string>(),
                                             j["secret"].get<std::string>());
    if (j.contains("secret_digest"))
        return proto::AuthToken{j["node_id"].get<std::string>(),
                                j["secret_digest"].get<std::string>(), util::now_iso8601()};
    throw err_malformed("token file needs a secret or secret_digest");
}

int classify(const FedError& e) {
    return e.code() == ErrorCode::Internal ? kExitEnv : kExitUser;
}

std::string fit(const std::string& s, std::size_t w) {
    std::string out = s;
    out.resize(std::max(w, s.size()), ' ');
    return out;
}

void render_result_table(const med::ResultSet& rs, std::ostream& out) {
    std::vector<std::string> cols = rs.projection;
    if (cols.empty()) {
        std::set<std::string> keys;
        for (const auto& r : rs.records)
            for (auto it = r.values.begin(); it != r.values.end(); ++it) keys.insert(it.key());
        cols.assign(keys.begin(), keys.end());
    }
    std::vector<std::size_t> widths;
    widths.push_back(std::string("record_id").size());
    for (const auto& r : rs.records) widths[0] = std::max(widths[0], r.record_id.size());
    for (const auto& c : cols) {
        std::size_t w = c.size();
        for (const auto& r : rs.records) {
            if (!r.values.contains(c)) continue;
            const json& v = r.values[c];
            w = std::max(w, (v.is_string() ? v.get<std::string>() : v.dump()).size());
        }
        widths.push_back(w);
    }
    out << fit("record_id", widths[0]);
    for (std::size_t i = 0; i < cols.size(); ++i) out << "  " << fit(cols[i], widths[i + 1]);
    out << "\n";
    for (const auto& r : rs.records) {
        out << fit(r.record_id, widths[0]);
        for (std::size_t i = 0; i < cols.size(); ++i) {
            std::string cell;
            if (r.values.contains(cols[i])) {
                const json& v = r.values[cols[i]];
                cell = v.is_string() ? v.get<std::string>() : v.dump();
            }
            out << "  " << fit(cell, widths[i + 1]);
        }
        out << "\n";
    }
    out << "(" << rs.records.size() << " records from " << rs.answered.size() << " nodes)\n";
}

int run_query_text(const Cli& cli, const std::string& text) {
    proto::Session session(cli.node_address, load_token(cli.token_path));
    json reply = session.call_expect(proto::Kind::SubQuery,
                                     json{{"scope", "federated"}, {"text", text}},
                                     proto::Kind::ResultSet);
    med::ResultSet rs = med::ResultSet::from_json(reply);
    if (cli.format == "st") {
        std::cout << rs.to_json().dump() << "\n";
    } else {
        render_result_table(rs, std::cout);
    }
    if (!rs.failed.empty()) {
        std::cerr << "warning: no answer from:";
        for (const auto& n : rs.failed) std::cerr << " " << n;
        std::cerr << "\n";
        return kExitPartial;
    }
    return kExitOk;
}

std::vector<std::string> lfns_from_where(const Cli& cli, const std::string& where) {
    proto::Session session(cli.node_address, load_token(cli.token_path));
    std::string text = "FIND image PROJECT lfn WHERE " + where;
    json reply = session.call_expect(proto::Kind::SubQuery,
                                     json{{"scope", "federated"}, {"text", text}},
                                     proto::Kind::ResultSet);
    med::ResultSet rs = med::ResultSet::from_json(reply);
    std::vector<std::string> lfns;
    for (const auto& r : rs.records)
        if (r.values.contains("lfn")) lfns.push_back(r.values["lfn"].get<std::string>());
    return lfns;
}

std::string fresh_job_id() {
    std::random_device rd;
    char buf[32];
    std::snprintf(buf, sizeof buf, "job-%08x%08x", rd(), rd());
    return buf;
}

int run_job_cmd(const Cli& cli, const std::string& algorithm, std::vector<std::string> lfns,
                const std::string& where, const std::vector<std::string>& params) {
    if (!where.empty()) {
        auto selected = lfns_from_where(cli, where);
        lfns.insert(lfns.end(), selected.begin(), selected.end());
    }
    if (lfns.empty()) throw err_malformed("job needs input lfns (arguments or --where)");

    json parameters = json::object();
    for (const auto& p : params) {
        auto eq = p.find('=');
        if (eq == std::string::npos) throw err_malformed("--param needs key=value, got: " + p);
        std::string key = p.substr(0, eq), value = p.substr(eq + 1);
        json parsed = json::parse(value, nullptr, false);
        parameters[key] = parsed.is_discarded() || parsed.is_string() ? json(value) : parsed;
    }

    med::JobSpec spec;
    spec.job_id = fresh_job_id();
    spec.algorithm = algorithm;
    spec.lfns = std::move(lfns);
    spec.parameters = std::move(parameters);

    proto::Session session(cli.node_address, load_token(cli.token_path));
    json body = spec.to_json();
    body["scope"] = "federated";
    json result = session.call_expect(proto::Kind::JobSubmit, body, proto::Kind::JobResult);

    if (cli.format == "st") {
        std::cout << result.dump() << "\n";
    } else {
        for (const auto& lfn : spec.lfns) {
            const json& e = result["entries"][lfn];
            std::cout << lfn << "  " << e.value("status", "?");
            if (e.contains("output")) std::cout << "  " << e["output"].dump();
            if (e.contains("detail")) std::cout << "  " << e["detail"].get<std::string>();
            std::cout << "\n";
        }
        std::cout << "(" << result.value("status", "?") << ")\n";
    }
    if (cli.explain && result.contains("placement")) {
        const json& placement = result["placement"];
        std::cerr << "placement threshold " << placement["threshold"] << " bytes, moved "
                  << placement["bytes_moved"] << " bytes\n";
        for (auto it = placement["per_lfn"].begin(); it != placement["per_lfn"].end(); ++it) {
            std::cerr << "  " << it.key() << " -> " << it.value()["mode"].get<std::string>();
            if (it.value().contains("node"))
                std::cerr << " @ " << it.value()["node"].get<std::string>();
            std::cerr << " (" << it.value()["size"] << " bytes)\n";
        }
    }
    // degraded success: the job ran but some inputs failed integrity or
    // their node vanished
    if (result.value("status", "") == "partial") return kExitPartial;
    for (const auto& lfn : spec.lfns) {
        std::string status = result["entries"][lfn].value("status", "");
        if (status == "integrity_error" || status == "error" || status == "unreachable")
            return kExitPartial;
    }
    return kExitOk;
}

int run_ingest(const Cli& cli, const std::vector<std::string>& files) {
    proto::AuthToken token = load_token(cli.token_path);
    std::atomic<std::size_t> next{0};
    std::atomic<int> ok_count{0}, fail_count{0};
    std::atomic<bool> env_failure{false};
    std::mutex out_mu;

    auto worker = [&] {
        std::unique_ptr<proto::Session> session;
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= files.size()) return;
            std::string line;
            try {
                if (!session)
                    session = std::make_unique<proto::Session>(cli.node_address, token);
                std::filesystem::path abs = std::filesystem::absolute(files[i]);
                json reply = session->call_expect(proto::Kind::Ingest,
                                                  json{{"path", abs.string()}},
                                                  proto::Kind::Ingest);
                line = "OK " + files[i] + ": study " + reply.value("study_record", "?") + ", " +
                       std::to_string(reply["image_records"].size()) + " images";
                ++ok_count;
            } catch (const FedError& e) {
                line = "FAIL " + files[i] + ": " + e.what();
                ++fail_count;
                if (classify(e) == kExitEnv) env_failure = true;
                if (e.code() == ErrorCode::Internal) session.reset();
            } catch (const std::exception& e) {
                line = "FAIL " + files[i] + ": " + e.what();
                ++fail_count;
                env_failure = true;
                session.reset();
            }
            std::lock_guard lk(out_mu);
            std::cout << line << "\n";
        }
    };
    std::vector<std::thread> pool;
    int threads = std::max(1, std::min<int>(cli.jobs, static_cast<int>(files.size())));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    std::cout << "ingested " << ok_count << "/" << files.size() << " studies";
    if (fail_count > 0) std::cout << " (" << fail_count << " failed)";
    std::cout << "\n";
    if (env_failure) return kExitEnv;
    return fail_count > 0 ? kExitUser : kExitOk;
}

int run_catalogue_ls(const Cli& cli, const std::string& prefix, std::size_t limit) {
    cat::CatalogueClient client(cli.node_address, load_token(cli.token_path));
    std::optional<std::string> after;
    std::size_t total = 0;
    for (;;) {
        cat::ListPage page = client.list(prefix, limit, after);
        for (const auto& name : page.names) {
            std::cout << name << "\n";
            ++total;
        }
        if (!page.next) break;
        after = page.next;
    }
    if (cli.format == "table") std::cerr << "(" << total << " names)\n";
    return kExitOk;
}

int run_catalogue_resolve(const Cli& cli, const std::string& lfn) {
    cat::CatalogueClient client(cli.node_address, load_token(cli.token_path));
    auto replicas = client.resolve(lfn);
    if (cli.format == "st") {
        json arr = json::array();
        for (const auto& e : replicas) arr.push_back(e.to_json());
        std::cout << arr.dump() << "\n";
    } else {
        for (const auto& e : replicas)
            std::cout << e.node_id << "  " << e.checksum << "  " << e.size_bytes << "\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"federated mammogram test-bed client"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags are accepted before or after the subcommand

    Cli cli;
    app.add_option("--node", cli.node_address, "target node or catalogue address (host:port)");
    app.add_option("--token", cli.token_path, "auth token file");
    app.add_option("--format", cli.format, "output format")
        ->check(CLI::IsMember({"table", "st"}));
    app.add_option("--jobs", cli.jobs, "parallel connections for ingest");
    app.add_flag("--explain", cli.explain, "print placement decisions for jobs");

    auto* ingest = app.add_subcommand("ingest", "ingest study containers into the target node");
    ingest->fallthrough();
    std::vector<std::string> ingest_files;
    ingest->add_option("files", ingest_files, "container files (.mgc)")->required();

    auto* query = app.add_subcommand("query", "run a federated query via the target node");
    query->fallthrough();
    std::string query_text;
    query->add_option("text", query_text, "FIND <kind> [PROJECT a,b] WHERE <predicate> [AT n,..]")
        ->required();

    auto* job = app.add_subcommand("job", "run an analysis job across the federation");
    job->fallthrough();
    std::string job_algorithm, job_where;
    std::vector<std::string> job_lfns, job_params;
    job->add_option("algorithm", job_algorithm, "qc_metrics|breast_density|detect_microcalcs|standardize")
        ->required();
    job->add_option("lfns", job_lfns, "input logical file names");
    job->add_option("--where", job_where, "select inputs with an image predicate");
    job->add_option("--param", job_params, "algorithm parameter key=value");

    auto* gen = app.add_subcommand("gen-corpus", "generate a synthetic study corpus");
    gen->fallthrough();
    std::size_t gen_n = 10;
    std::uint64_t gen_seed = 1;
    std::string gen_out;
    gen->add_option("--n", gen_n, "study count")->required();
    gen->add_option("--seed", gen_seed, "deterministic seed")->required();
    gen->add_option("--out", gen_out, "output directory")->required();

    auto* catalogue = app.add_subcommand("catalogue", "inspect the virtual file catalogue");
    catalogue->fallthrough();
    catalogue->require_subcommand(1);
    auto* cat_ls = catalogue->add_subcommand("ls", "list logical file names");
    cat_ls->fallthrough();
    std::string ls_prefix = "/";
    std::size_t ls_limit = 1000;
    cat_ls->add_option("prefix", ls_prefix, "path prefix");
    cat_ls->add_option("--limit", ls_limit, "page size");
    auto* cat_resolve = catalogue->add_subcommand("resolve", "resolve an lfn to its replicas");
    cat_resolve->fallthrough();
    std::string resolve_lfn;
    cat_resolve->add_option("lfn", resolve_lfn, "logical file name")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest) return run_ingest(cli, ingest_files);
        if (*query) return run_query_text(cli, query_text);
        if (*job) return run_job_cmd(cli, job_algorithm, job_lfns, job_where, job_params);
        if (*gen) {
            try {
                json manifest = gen::generate_corpus(gen_n, gen_seed, gen_out);
                std::cout << "generated " << gen_n << " studies in " << gen_out << "\n";
                return kExitOk;
            } catch (const FedError&) {
                throw;
            } catch (const std::exception& e) {
                std::cerr << "error: " << e.what() << "\n";
                return kExitEnv;
            }
        }
        if (*cat_ls) return run_catalogue_ls(cli, ls_prefix, ls_limit);
        if (*cat_resolve) return run_catalogue_resolve(cli, resolve_lfn);
    } catch (const FedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return classify(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitEnv;
    }
    return kExitUser;
}
