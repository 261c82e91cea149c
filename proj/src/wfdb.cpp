#include "wfdb.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace ekmid::wfdb {

namespace {

std::string to_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

bool parse_int(const std::string& tok, long& out) {
    try {
        size_t pos = 0;
        out = std::stol(tok, &pos);
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> toks;
    std::istringstream iss(line);
    std::string t;
    while (iss >> t) toks.push_back(t);
    return toks;
}

std::vector<uint8_t> read_all_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) throw DataError("cannot open file: " + p.string());
    return std::vector<uint8_t>(std::istreambuf_iterator<char>(f),
                                std::istreambuf_iterator<char>());
}

int sign_extend_12(int v) { return (v & 0x800) ? v - 4096 : v; }

}  // namespace

RecordMeta parse_header(const std::string& header_text) {
    std::istringstream in(header_text);
    std::string line;
    RecordMeta meta;
    bool got_record_line = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            meta.comments.push_back(line);
            continue;
        }
        auto toks = split_ws(line);
        if (!got_record_line) {
            // record_name n_signals [fs [n_samples]]
            if (toks.size() < 2) throw DataError("MalformedHeader: record line needs name and n_signals");
            // record name may carry /segment or extra attributes after a slash
            meta.record_name = toks[0].substr(0, toks[0].find('/'));
            long nsig = 0;
            if (!parse_int(toks[1], nsig) || nsig < 1)
                throw DataError("MalformedHeader: bad n_signals '" + toks[1] + "'");
            meta.n_signals = static_cast<int>(nsig);
            if (toks.size() >= 3) {
                // fs token may be "360/360" (frames) — leading number is the rate
                try {
                    meta.sampling_frequency = std::stod(toks[2]);
                } catch (...) {
                    throw DataError("MalformedHeader: non-numeric sampling frequency '" + toks[2] + "'");
                }
            } else {
                meta.sampling_frequency = 250.0;  // WFDB spec default
            }
            if (meta.sampling_frequency <= 0)
                throw DataError("MalformedHeader: sampling frequency must be positive");
            if (toks.size() >= 4) {
                long ns = 0;
                if (!parse_int(toks[3], ns) || ns < 0)
                    throw DataError("MalformedHeader: bad n_samples '" + toks[3] + "'");
                meta.n_samples = ns;
            }
            got_record_line = true;
            continue;
        }
        if (static_cast<int>(meta.signals.size()) >= meta.n_signals) continue;  // info lines
        // file_name format[xN] [gain[(baseline)][/units] [adc_res [adc_zero [init [checksum [blk [desc]]]]]]]
        if (toks.size() < 2) throw DataError("MalformedHeader: signal line needs file and format");
        SignalSpec sig;
        sig.file_name = toks[0];
        {
            std::string fmt = toks[1];
            // strip samples-per-frame / skew / byte-offset suffixes (x, :, +)
            size_t cut = fmt.find_first_of("x:+");
            if (cut != std::string::npos) fmt = fmt.substr(0, cut);
            long f = 0;
            if (!parse_int(fmt, f)) throw DataError("MalformedHeader: bad format '" + toks[1] + "'");
            if (f != 212 && f != 16)
                throw DataError("UnsupportedFormat: format " + std::to_string(f));
            sig.format = static_cast<int>(f);
        }
        bool baseline_from_gain = false;
        if (toks.size() >= 3) {
            std::string g = toks[2];
            size_t units = g.find('/');
            if (units != std::string::npos) g = g.substr(0, units);
            size_t paren = g.find('(');
            if (paren != std::string::npos) {
                size_t close = g.find(')', paren);
                if (close == std::string::npos)
                    throw DataError("MalformedHeader: unbalanced baseline in '" + toks[2] + "'");
                long b = 0;
                if (!parse_int(g.substr(paren + 1, close - paren - 1), b))
                    throw DataError("MalformedHeader: bad baseline in '" + toks[2] + "'");
                sig.baseline = static_cast<int>(b);
                baseline_from_gain = true;
                g = g.substr(0, paren);
            }
            double gain = 0.0;
            try {
                gain = std::stod(g);
            } catch (...) {
                throw DataError("MalformedHeader: bad gain '" + toks[2] + "'");
            }
            sig.gain = gain;
        }
        if (sig.gain == 0.0) sig.gain = 200.0;  // WFDB default for unspecified gain
        if (sig.gain < 0) throw DataError("MalformedHeader: negative gain");
        auto opt_int = [&](size_t idx, int& dst) {
            if (toks.size() > idx) {
                long v = 0;
                if (parse_int(toks[idx], v)) {
                    dst = static_cast<int>(v);
                    return true;
                }
            }
            return false;
        };
        opt_int(3, sig.adc_resolution);
        opt_int(4, sig.adc_zero);
        opt_int(5, sig.initial_value);
        sig.has_checksum = opt_int(6, sig.checksum);
        if (!baseline_from_gain) sig.baseline = sig.adc_zero;
        if (toks.size() > 8) {
            std::string desc;
            for (size_t i = 8; i < toks.size(); ++i) {
                if (!desc.empty()) desc += ' ';
                desc += toks[i];
            }
            sig.description = desc;
        }
        meta.signals.push_back(std::move(sig));
    }
    if (!got_record_line) throw DataError("MalformedHeader: empty header");
    if (static_cast<int>(meta.signals.size()) != meta.n_signals)
        throw DataError("MalformedHeader: expected " + std::to_string(meta.n_signals) +
                        " signal lines, got " + std::to_string(meta.signals.size()));
    meta.subject_id = meta.record_name;
    return meta;
}

std::vector<int> decode_format212(const std::vector<uint8_t>& bytes, size_t n_samples) {
    std::vector<int> out;
    out.reserve(n_samples);
    size_t need = (n_samples * 3 + 1) / 2;
    if (bytes.size() < need)
        throw DataError("TruncatedSignal: format 212 needs " + std::to_string(need) +
                        " bytes, have " + std::to_string(bytes.size()));
    for (size_t k = 0; out.size() < n_samples; ++k) {
        size_t b = 3 * k;
        int s0 = ((bytes[b + 1] & 0x0F) << 8) | bytes[b];
        out.push_back(sign_extend_12(s0));
        if (out.size() >= n_samples) break;
        int s1 = ((bytes[b + 1] & 0xF0) << 4) | bytes[b + 2];
        out.push_back(sign_extend_12(s1));
    }
    return out;
}

std::vector<int> decode_format16(const std::vector<uint8_t>& bytes, size_t n_samples) {
    if (bytes.size() < n_samples * 2)
        throw DataError("TruncatedSignal: format 16 needs " + std::to_string(n_samples * 2) +
                        " bytes, have " + std::to_string(bytes.size()));
    std::vector<int> out;
    out.reserve(n_samples);
    for (size_t i = 0; i < n_samples; ++i) {
        uint16_t u = static_cast<uint16_t>(bytes[2 * i]) |
                     (static_cast<uint16_t>(bytes[2 * i + 1]) << 8);
        out.push_back(static_cast<int16_t>(u));
    }
    return out;
}

std::string derive_subject_id(const std::filesystem::path& header_path,
                              const std::string& record_name) {
    auto parent = header_path.parent_path().filename().string();
    auto lower = to_lower(parent);
    if (lower.rfind("patient", 0) == 0 || lower.rfind("subject", 0) == 0) return parent;
    return record_name;
}

EcgRecord load_channel(const std::filesystem::path& header_path,
                       const std::filesystem::path& dat_path, int channel,
                       const LoadOptions& opts) {
    std::ifstream hf(header_path);
    if (!hf) throw DataError("cannot open header: " + header_path.string());
    std::stringstream ss;
    ss << hf.rdbuf();
    RecordMeta meta = parse_header(ss.str());
    if (channel < 0 || channel >= meta.n_signals)
        throw DataError("ChannelOutOfRange: channel " + std::to_string(channel) + " of " +
                        std::to_string(meta.n_signals));
    int fmt = meta.signals[0].format;
    for (const auto& s : meta.signals)
        if (s.format != fmt) throw DataError("mixed signal formats are not supported");

    auto bytes = read_all_bytes(dat_path);
    size_t total = static_cast<size_t>(meta.n_samples) * meta.n_signals;
    if (meta.n_samples == 0) {
        // header may omit the length; infer from the file size
        total = (fmt == 212) ? bytes.size() * 2 / 3 : bytes.size() / 2;
        total -= total % meta.n_signals;
        meta.n_samples = static_cast<int64_t>(total / meta.n_signals);
    }
    std::vector<int> raw = (fmt == 212) ? decode_format212(bytes, total)
                                        : decode_format16(bytes, total);

    const auto& sig = meta.signals[channel];
    if (opts.verify_checksum && sig.has_checksum) {
        int16_t sum = 0;
        for (size_t i = channel; i < raw.size(); i += meta.n_signals)
            sum = static_cast<int16_t>(sum + raw[i]);
        if (sum != static_cast<int16_t>(sig.checksum))
            throw DataError("checksum mismatch on channel " + std::to_string(channel));
    }

    EcgRecord rec;
    rec.subject_id = derive_subject_id(header_path, meta.record_name);
    rec.fs = meta.sampling_frequency;
    rec.source = header_path.string() + ":" + std::to_string(channel);
    rec.samples.reserve(meta.n_samples);
    double gain = sig.gain;
    double baseline = sig.baseline;
    for (size_t i = channel; i < raw.size(); i += meta.n_signals)
        rec.samples.push_back((raw[i] - baseline) / gain);
    if (rec.samples.empty()) throw DataError("record has no samples: " + header_path.string());
    for (const auto& c : meta.comments) {
        auto lc = to_lower(c);
        auto pos = lc.find("reason for admission");
        if (pos != std::string::npos) {
            auto colon = c.find(':', pos);
            if (colon != std::string::npos) {
                std::string hint = c.substr(colon + 1);
                while (!hint.empty() && std::isspace(static_cast<unsigned char>(hint.front())))
                    hint.erase(hint.begin());
                rec.label_hint = hint;
            }
            break;
        }
    }
    return rec;
}

EcgRecord load_channel(const std::filesystem::path& header_path, int channel,
                       const LoadOptions& opts) {
    std::ifstream hf(header_path);
    if (!hf) throw DataError("cannot open header: " + header_path.string());
    std::stringstream ss;
    ss << hf.rdbuf();
    RecordMeta meta = parse_header(ss.str());
    if (meta.signals.empty()) throw DataError("no signals in header");
    auto dat = header_path.parent_path() / meta.signals[0].file_name;
    return load_channel(header_path, dat, channel, opts);
}

EcgRecord load_plaintext(const std::filesystem::path& path, double fs, int column) {
    if (fs <= 0) throw ConfigError("plaintext fs must be positive");
    std::ifstream f(path);
    if (!f) throw DataError("cannot open file: " + path.string());
    EcgRecord rec;
    rec.fs = fs;
    rec.subject_id = path.stem().string();
    rec.source = path.string() + ":" + std::to_string(column);
    std::string line;
    size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        auto toks = split_ws(line);
        if (column >= static_cast<int>(toks.size()))
            throw DataError("NonNumericSample: line " + std::to_string(lineno) +
                            " has no column " + std::to_string(column));
        try {
            size_t pos = 0;
            double v = std::stod(toks[column], &pos);
            if (pos != toks[column].size()) throw std::invalid_argument("trailing");
            rec.samples.push_back(v);
        } catch (...) {
            throw DataError("NonNumericSample: line " + std::to_string(lineno) + ": '" +
                            toks[column] + "'");
        }
    }
    if (rec.samples.empty()) throw DataError("EmptyFile: " + path.string());
    return rec;
}

std::vector<RecordMeta> filter_subjects_by_pathology(const std::vector<RecordMeta>& metas,
                                                     const std::vector<std::string>& allowlist) {
    // subject -> lexicographically first matching record name
    std::map<std::string, const RecordMeta*> kept;
    for (const auto& m : metas) {
        bool match = false;
        for (const auto& c : m.comments) {
            auto lc = to_lower(c);
            for (const auto& a : allowlist) {
                if (lc.find(to_lower(a)) != std::string::npos) {
                    match = true;
                    break;
                }
            }
            if (match) break;
        }
        if (!match) continue;
        auto it = kept.find(m.subject_id);
        if (it == kept.end() || m.record_name < it->second->record_name) kept[m.subject_id] = &m;
    }
    std::vector<RecordMeta> out;
    out.reserve(kept.size());
    for (const auto& [_, m] : kept) out.push_back(*m);
    return out;
}

}  // namespace ekmid::wfdb
