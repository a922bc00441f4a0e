/* h3ps — publish-subscribe over HTTP/3 semantics with an MQTT-over-QUIC
 * baseline and a network-conditioned benchmark harness.
 *
 * C API: opaque handles, integer status codes, caller-owned strings released
 * with h3ps_string_free(). All functions are safe to call from any single
 * thread; one handle must not be used from two threads at once.
 */
#ifndef H3PS_H
#define H3PS_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum h3ps_status {
    H3PS_OK = 0,
    H3PS_ERR_INVALID_ARG = 1,
    H3PS_ERR_CONFIG = 2,
    H3PS_ERR_SCENARIO = 3,
    H3PS_ERR_IO = 4,
    H3PS_ERR_NOT_FOUND = 5,
    H3PS_ERR_TOO_LARGE = 6,
    H3PS_ERR_EMPTY = 7,
    H3PS_ERR_CLOSED = 8,
    H3PS_ERR_UNSUPPORTED = 9,
} h3ps_status;

const char* h3ps_status_str(h3ps_status status);
const char* h3ps_version(void);

/* Most-recent failure detail for this thread (valid until the next call). */
const char* h3ps_last_error(void);

void h3ps_string_free(char* s);

/* ------------------------------------------------------------------ */
/* Broker                                                               */
/* ------------------------------------------------------------------ */

typedef struct h3ps_broker h3ps_broker;
typedef struct h3ps_subscriber h3ps_subscriber;

/* Topic names: 1-255 bytes of [A-Za-z0-9_.-]. */
h3ps_status h3ps_topic_validate(const char* name);

h3ps_broker* h3ps_broker_new(void);
void h3ps_broker_free(h3ps_broker* broker);

/* created: set to 1 on fresh creation, 0 when the topic already existed. */
h3ps_status h3ps_broker_create_topic(h3ps_broker* broker, const char* topic, int* created);
int h3ps_broker_topic_exists(h3ps_broker* broker, const char* topic);
h3ps_status h3ps_broker_delete_topic(h3ps_broker* broker, const char* topic);

h3ps_status h3ps_broker_publish(h3ps_broker* broker, const char* topic, const uint8_t* data,
                                size_t len, size_t* delivered);

h3ps_status h3ps_broker_subscribe(h3ps_broker* broker, const char* topic,
                                  h3ps_subscriber** out_subscriber);
h3ps_status h3ps_broker_unsubscribe(h3ps_broker* broker, h3ps_subscriber* subscriber);

/* Non-blocking poll. H3PS_OK: one message copied (len <= cap, truncated
 * otherwise); H3PS_ERR_EMPTY: nothing queued; H3PS_ERR_CLOSED: end of
 * stream (topic deleted or unsubscribed). */
h3ps_status h3ps_subscriber_poll(h3ps_subscriber* subscriber, uint8_t* buf, size_t cap,
                                 size_t* len, uint64_t* seq);

/* Frees the handle only; use h3ps_broker_unsubscribe to detach first. */
void h3ps_subscriber_free(h3ps_subscriber* subscriber);

/* ------------------------------------------------------------------ */
/* Scenarios and reports                                               */
/* ------------------------------------------------------------------ */

typedef struct h3ps_report h3ps_report;

/* Runs a benchmark scenario from a JSON config:
 *   {"scenario": "first_data" | "interleaved" | "overhead_sweep" | "resource",
 *    "protocol": "h3" | "mqtt" | "both",
 *    "mode": "virtual" | "realtime",
 *    "profile": {"downlink_kbps":127, "uplink_kbps":159, "rtt_ms":2000,
 *                "loss":0, "seed":1},
 *    "sizes": [1024, ...], "publisher_count": 5, "stagger_ms": 1000,
 *    "repetitions": 10, ...}
 * Returns H3PS_ERR_CONFIG for an invalid config, H3PS_ERR_SCENARIO when the
 * run aborted; details via h3ps_last_error(). */
h3ps_status h3ps_run_scenario(const char* config_json, h3ps_report** out_report);

void h3ps_report_free(h3ps_report* report);

int h3ps_report_failed_runs(const h3ps_report* report);

/* Writes summary.csv, report.json and per-connection series into dir. */
h3ps_status h3ps_report_write(const h3ps_report* report, const char* dir);

/* Caller-owned strings (h3ps_string_free). */
char* h3ps_report_summary_csv(const h3ps_report* report);
char* h3ps_report_json(const h3ps_report* report);
char* h3ps_report_table(const h3ps_report* report);

/* Loads a previously written report directory and renders its table. */
h3ps_status h3ps_report_load(const char* dir, h3ps_report** out_report);

/* ------------------------------------------------------------------ */
/* Profiles                                                             */
/* ------------------------------------------------------------------ */

/* Validates a profile JSON file; returns its canonical JSON form. */
h3ps_status h3ps_profile_check(const char* path, char** out_canonical_json);

#ifdef __cplusplus
}
#endif

#endif /* H3PS_H */
