#include "h3ps.h"

#include <cstring>
#include <string>

#include "core/bench.hpp"
#include "core/broker.hpp"
#include "core/profile_io.hpp"
#include "core/report.hpp"
#include "core/topic.hpp"

using namespace h3ps;

namespace {

thread_local std::string g_last_error;

void set_error(std::string msg) {
    g_last_error = std::move(msg);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) return nullptr;
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

Result<TopicName, TopicError> parse_topic(const char* name) {
    return TopicName::parse(name ? std::string_view(name) : std::string_view());
}

}  // namespace

struct h3ps_broker {
    Broker broker;
};

struct h3ps_subscriber {
    SubscriberPtr sub;
};

struct h3ps_report {
    bench::MetricsReport report;
};

extern "C" {

const char* h3ps_status_str(h3ps_status status) {
    switch (status) {
    case H3PS_OK: return "ok";
    case H3PS_ERR_INVALID_ARG: return "invalid argument";
    case H3PS_ERR_CONFIG: return "invalid configuration";
    case H3PS_ERR_SCENARIO: return "scenario failed";
    case H3PS_ERR_IO: return "i/o error";
    case H3PS_ERR_NOT_FOUND: return "not found";
    case H3PS_ERR_TOO_LARGE: return "too large";
    case H3PS_ERR_EMPTY: return "empty";
    case H3PS_ERR_CLOSED: return "closed";
    case H3PS_ERR_UNSUPPORTED: return "unsupported";
    }
    return "unknown";
}

const char* h3ps_version(void) {
    return "0.1.0";
}

const char* h3ps_last_error(void) {
    return g_last_error.c_str();
}

void h3ps_string_free(char* s) {
    std::free(s);
}

h3ps_status h3ps_topic_validate(const char* name) {
    auto r = parse_topic(name);
    if (r.ok()) return H3PS_OK;
    set_error(std::string("topic name: ") + to_string(r.error()));
    return H3PS_ERR_INVALID_ARG;
}

h3ps_broker* h3ps_broker_new(void) {
    return new h3ps_broker{};
}

void h3ps_broker_free(h3ps_broker* broker) {
    delete broker;
}

h3ps_status h3ps_broker_create_topic(h3ps_broker* broker, const char* topic, int* created) {
    if (!broker) return H3PS_ERR_INVALID_ARG;
    auto t = parse_topic(topic);
    if (!t.ok()) return H3PS_ERR_INVALID_ARG;
    const bool fresh = broker->broker.create_topic(t.value()) == Broker::Create::created;
    if (created) *created = fresh ? 1 : 0;
    return H3PS_OK;
}

int h3ps_broker_topic_exists(h3ps_broker* broker, const char* topic) {
    if (!broker) return 0;
    auto t = parse_topic(topic);
    return t.ok() && broker->broker.topic_exists(t.value()) ? 1 : 0;
}

h3ps_status h3ps_broker_delete_topic(h3ps_broker* broker, const char* topic) {
    if (!broker) return H3PS_ERR_INVALID_ARG;
    auto t = parse_topic(topic);
    if (!t.ok()) return H3PS_ERR_INVALID_ARG;
    return broker->broker.delete_topic(t.value()) ? H3PS_OK : H3PS_ERR_NOT_FOUND;
}

h3ps_status h3ps_broker_publish(h3ps_broker* broker, const char* topic, const uint8_t* data,
                                size_t len, size_t* delivered) {
    if (!broker || (len > 0 && !data)) return H3PS_ERR_INVALID_ARG;
    auto t = parse_topic(topic);
    if (!t.ok()) return H3PS_ERR_INVALID_ARG;
    auto r = broker->broker.publish(t.value(), {data, len});
    if (!r.ok()) {
        return r.error() == PublishError::not_found ? H3PS_ERR_NOT_FOUND : H3PS_ERR_TOO_LARGE;
    }
    if (delivered) *delivered = r.value();
    return H3PS_OK;
}

h3ps_status h3ps_broker_subscribe(h3ps_broker* broker, const char* topic,
                                  h3ps_subscriber** out_subscriber) {
    if (!broker || !out_subscriber) return H3PS_ERR_INVALID_ARG;
    auto t = parse_topic(topic);
    if (!t.ok()) return H3PS_ERR_INVALID_ARG;
    auto r = broker->broker.subscribe(t.value());
    if (!r.ok()) return H3PS_ERR_NOT_FOUND;
    *out_subscriber = new h3ps_subscriber{r.value()};
    return H3PS_OK;
}

h3ps_status h3ps_broker_unsubscribe(h3ps_broker* broker, h3ps_subscriber* subscriber) {
    if (!broker || !subscriber || !subscriber->sub) return H3PS_ERR_INVALID_ARG;
    return broker->broker.unsubscribe(subscriber->sub->id()) ? H3PS_OK : H3PS_ERR_NOT_FOUND;
}

h3ps_status h3ps_subscriber_poll(h3ps_subscriber* subscriber, uint8_t* buf, size_t cap,
                                 size_t* len, uint64_t* seq) {
    if (!subscriber || !subscriber->sub) return H3PS_ERR_INVALID_ARG;
    auto& sink = subscriber->sub->sink();
    auto msg = sink.try_pop();
    if (!msg) return sink.closed() ? H3PS_ERR_CLOSED : H3PS_ERR_EMPTY;
    const size_t n = msg->payload.size() < cap ? msg->payload.size() : cap;
    if (buf && n > 0) std::memcpy(buf, msg->payload.data(), n);
    if (len) *len = msg->payload.size();
    if (seq) *seq = msg->seq;
    return H3PS_OK;
}

void h3ps_subscriber_free(h3ps_subscriber* subscriber) {
    delete subscriber;
}

h3ps_status h3ps_run_scenario(const char* config_json, h3ps_report** out_report) {
    if (!config_json || !out_report) return H3PS_ERR_INVALID_ARG;
    auto cfg = bench::config_from_json(config_json);
    if (!cfg.ok()) {
        set_error(cfg.error());
        return H3PS_ERR_CONFIG;
    }
    cfg.value().apply_defaults();
    if (auto v = cfg.value().validate(); !v.ok()) {
        set_error(v.error());
        return H3PS_ERR_CONFIG;
    }
    auto report = bench::run_scenario(cfg.value());
    if (!report.ok()) {
        set_error(report.error());
        return H3PS_ERR_SCENARIO;
    }
    *out_report = new h3ps_report{std::move(report.value())};
    return H3PS_OK;
}

void h3ps_report_free(h3ps_report* report) {
    delete report;
}

int h3ps_report_failed_runs(const h3ps_report* report) {
    return report ? report->report.failed_runs : 0;
}

h3ps_status h3ps_report_write(const h3ps_report* report, const char* dir) {
    if (!report || !dir) return H3PS_ERR_INVALID_ARG;
    auto r = bench::write_report(report->report, dir);
    if (!r.ok()) {
        set_error(r.error());
        return H3PS_ERR_IO;
    }
    return H3PS_OK;
}

char* h3ps_report_summary_csv(const h3ps_report* report) {
    return report ? dup_string(bench::summary_csv(report->report)) : nullptr;
}

char* h3ps_report_json(const h3ps_report* report) {
    return report ? dup_string(bench::report_json(report->report)) : nullptr;
}

char* h3ps_report_table(const h3ps_report* report) {
    return report ? dup_string(bench::render_table(report->report)) : nullptr;
}

h3ps_status h3ps_report_load(const char* dir, h3ps_report** out_report) {
    if (!dir || !out_report) return H3PS_ERR_INVALID_ARG;
    auto r = bench::load_report(dir);
    if (!r.ok()) {
        set_error(r.error());
        return H3PS_ERR_IO;
    }
    *out_report = new h3ps_report{std::move(r.value())};
    return H3PS_OK;
}

h3ps_status h3ps_profile_check(const char* path, char** out_canonical_json) {
    if (!path) return H3PS_ERR_INVALID_ARG;
    auto r = net::profile_from_file(path);
    if (!r.ok()) {
        set_error(r.error());
        return H3PS_ERR_CONFIG;
    }
    if (out_canonical_json) {
        *out_canonical_json = dup_string(net::profile_to_json(r.value().profile));
    }
    return H3PS_OK;
}

}  // extern "C"
