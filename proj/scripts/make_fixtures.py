#!/usr/bin/env python3
"""Regenerates the hand-labeled KCF fixture corpus under tests/fixtures/kcfs
plus tests/fixtures/expected_labels.json.

Expected line numbers are found by plain text search over the emitted files,
so the expectations stay independent of the production YAML parser. Each
fixture's label list was enumerated by hand against the default rule pack.
"""

import json
import os

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures")
KCF_DIR = os.path.join(FIXTURE_DIR, "kcfs")

GOOD_IMAGE = "registry.example.com/app:1.4.2"


def container(name="app", image=GOOD_IMAGE, requests_cpu=True, requests_mem=True,
              limits_cpu=True, limits_mem=True, run_as_nonroot=True, run_as_user=None,
              readonly_fs=True, cap_drop=True, cap_add=None, privileged=None,
              allow_pe=None, liveness=True, readiness=True, env=None, indent=4):
    pad = " " * indent
    lines = [f"{pad}- name: {name}", f"{pad}  image: {image}"]
    if requests_cpu or requests_mem or limits_cpu or limits_mem:
        lines.append(f"{pad}  resources:")
        if requests_cpu or requests_mem:
            lines.append(f"{pad}    requests:")
            if requests_cpu:
                lines.append(f"{pad}      cpu: 100m")
            if requests_mem:
                lines.append(f"{pad}      memory: 128Mi")
        if limits_cpu or limits_mem:
            lines.append(f"{pad}    limits:")
            if limits_cpu:
                lines.append(f"{pad}      cpu: 500m")
            if limits_mem:
                lines.append(f"{pad}      memory: 256Mi")
    sc = []
    if run_as_nonroot:
        sc.append(f"{pad}    runAsNonRoot: true")
    if run_as_user is not None:
        sc.append(f"{pad}    runAsUser: {run_as_user}")
    if readonly_fs:
        sc.append(f"{pad}    readOnlyRootFilesystem: true")
    if privileged is not None:
        sc.append(f"{pad}    privileged: {privileged}")
    if allow_pe is not None:
        sc.append(f"{pad}    allowPrivilegeEscalation: {allow_pe}")
    if cap_drop or cap_add:
        sc.append(f"{pad}    capabilities:")
        if cap_drop:
            sc.append(f"{pad}      drop:")
            sc.append(f"{pad}        - ALL")
        if cap_add:
            sc.append(f"{pad}      add:")
            for cap in cap_add:
                sc.append(f"{pad}        - {cap}")
    if sc:
        lines.append(f"{pad}  securityContext:")
        lines.extend(sc)
    if env:
        lines.append(f"{pad}  env:")
        for k, v in env:
            lines.append(f"{pad}    - name: {k}")
            lines.append(f"{pad}      value: {v}")
    if liveness:
        lines += [f"{pad}  livenessProbe:", f"{pad}    httpGet:",
                  f"{pad}      path: /healthz", f"{pad}      port: 8080"]
    if readiness:
        lines += [f"{pad}  readinessProbe:", f"{pad}    httpGet:",
                  f"{pad}      path: /ready", f"{pad}      port: 8080"]
    return lines


def pod(name, containers, namespace="prod", pod_sc=None, host_network=None,
        host_pid=None, host_ipc=None, automount=None, service_account=None,
        volumes=None, head_comment=None):
    lines = []
    if head_comment:
        lines += [f"# {head_comment}", ""]
    lines += ["apiVersion: v1", "kind: Pod", "metadata:", f"  name: {name}"]
    if namespace is not None:
        lines.append(f"  namespace: {namespace}")
    lines.append("spec:")
    if automount is not None:
        lines.append(f"  automountServiceAccountToken: {automount}")
    if service_account is not None:
        lines.append(f"  serviceAccountName: {service_account}")
    if host_network is not None:
        lines.append(f"  hostNetwork: {host_network}")
    if host_pid is not None:
        lines.append(f"  hostPID: {host_pid}")
    if host_ipc is not None:
        lines.append(f"  hostIPC: {host_ipc}")
    if pod_sc:
        lines.append("  securityContext:")
        for k, v in pod_sc:
            lines.append(f"    {k}: {v}")
    lines.append("  containers:")
    for c in containers:
        lines.extend(c)
    if volumes:
        lines.append("  volumes:")
        lines.extend(volumes)
    return "\n".join(lines) + "\n"


def workload(kind, name, containers, replicas=3, namespace="prod", api="apps/v1"):
    lines = [f"apiVersion: {api}", f"kind: {kind}", "metadata:", f"  name: {name}",
             f"  namespace: {namespace}", "spec:", f"  replicas: {replicas}",
             "  selector:", "    matchLabels:", f"      app: {name}",
             "  template:", "    metadata:", "      labels:", f"        app: {name}",
             "    spec:", "      containers:"]
    for c in containers:
        lines.extend(c)
    return "\n".join(lines) + "\n"


def role(kind, name, verbs, resources, namespace="prod"):
    lines = ["apiVersion: rbac.authorization.k8s.io/v1", f"kind: {kind}", "metadata:",
             f"  name: {name}"]
    if kind == "Role":
        lines.append(f"  namespace: {namespace}")
    lines += ["rules:", "  - apiGroups:", "      - \"\"", "    resources:"]
    for r in resources:
        lines.append(f"      - \"{r}\"" if r == "*" else f"      - {r}")
    lines.append("    verbs:")
    for v in verbs:
        lines.append(f"      - \"{v}\"" if v == "*" else f"      - {v}")
    return "\n".join(lines) + "\n"


def find_line(text, needle, occurrence=1):
    hits = [i + 1 for i, line in enumerate(text.split("\n")) if needle in line]
    if len(hits) < occurrence:
        raise SystemExit(f"needle {needle!r} occurrence {occurrence} not found")
    return hits[occurrence - 1]


def exp(resource, umi_id, path, needle=None, occurrence=1):
    return {"resource": resource, "id": umi_id, "path": path,
            "needle": needle, "occurrence": occurrence}


# Grounded leaf paths for the checks that fire when a setting is absent.
MISSING_PATHS = {
    30: "resources/requests/cpu", 31: "resources/requests/memory",
    28: "resources/limits/cpu", 29: "resources/limits/memory",
    110: "securityContext/runAsNonRoot", 112: "securityContext/readOnlyRootFilesystem",
    96: "securityContext/capabilities/drop", 85: "livenessProbe", 86: "readinessProbe",
}


def missing_labels(resource, cbase, ids):
    return [exp(resource, i, f"{cbase}/{MISSING_PATHS[i]}") for i in ids]


def sparse_container_labels(resource, cbase):
    return missing_labels(resource, cbase, [28, 29, 30, 31, 85, 86, 96, 110, 112])


HC = container  # hygienic by default

FIXTURES = {}


def add(name, text, labels):
    FIXTURES[name] = (text, labels)


C0 = "spec/containers/[0]"
T0 = "spec/template/spec/containers/[0]"

# --- clean files ---
add("clean_pod.yaml", pod("web", [HC()]), [])
add("clean_deployment.yaml", workload("Deployment", "web", [HC(indent=8)]), [])
add("clean_role.yaml", role("Role", "reader", ["get", "list"], ["pods"]), [])
add("clean_service.yaml",
    "apiVersion: v1\nkind: Service\nmetadata:\n  name: web\n  namespace: prod\n"
    "spec:\n  selector:\n    app: web\n  ports:\n    - port: 80\n", [])

# --- the sparse pod from the motivating example: every firing check listed ---
fig1 = ("apiVersion: v1\nkind: Pod\nmetadata:\n  name: pod-name\nspec:\n"
        "  containers:\n    - name: some-container\n      image: some-image\n"
        "      command: [ some-command ]\n  securityContext:\n    privileged: true\n")
add("privileged_sparse_pod.yaml", fig1,
    [exp("pod-name", 52, "spec/securityContext/privileged", "privileged: true")]
    + sparse_container_labels("pod-name", C0))

# --- single-violation pods on the hygienic template ---
add("privileged_container.yaml", pod("app", [HC(privileged="true")]),
    [exp("app", 52, f"{C0}/securityContext/privileged", "privileged: true")])
add("allow_priv_escalation.yaml", pod("app", [HC(allow_pe="true")]),
    [exp("app", 52, f"{C0}/securityContext/allowPrivilegeEscalation",
         "allowPrivilegeEscalation: true")])
add("privileged_false_ok.yaml", pod("app", [HC(privileged="false", allow_pe="false")]), [])
add("cap_add_sysadmin.yaml", pod("app", [HC(cap_add=["SYS_ADMIN"])]),
    [exp("app", 97, f"{C0}/securityContext/capabilities/add", "add:")])
add("no_cap_drop.yaml", pod("app", [HC(cap_drop=False)]),
    missing_labels("app", C0, [96]))
add("default_namespace.yaml", pod("app", [HC()], namespace="default"),
    [exp("app", 9, "metadata/namespace", "namespace: default")])
add("latest_tag.yaml", pod("app", [HC(image="nginx:latest")]),
    [exp("app", 140, f"{C0}/image", "image: nginx:latest")])
add("missing_cpu_request.yaml", pod("app", [HC(requests_cpu=False)]),
    missing_labels("app", C0, [30]))
add("missing_memory_request.yaml", pod("app", [HC(requests_mem=False)]),
    missing_labels("app", C0, [31]))
add("missing_cpu_limit.yaml", pod("app", [HC(limits_cpu=False)]),
    missing_labels("app", C0, [28]))
add("missing_memory_limit.yaml", pod("app", [HC(limits_mem=False)]),
    missing_labels("app", C0, [29]))
add("missing_all_resources.yaml",
    pod("app", [HC(requests_cpu=False, requests_mem=False, limits_cpu=False, limits_mem=False)]),
    missing_labels("app", C0, [28, 29, 30, 31]))
add("no_run_as_nonroot.yaml", pod("app", [HC(run_as_nonroot=False)]),
    missing_labels("app", C0, [110]))
add("run_as_root_uid.yaml", pod("app", [HC(run_as_user=0)]),
    [exp("app", 111, f"{C0}/securityContext/runAsUser", "runAsUser: 0")])
add("run_as_uid_1000_ok.yaml", pod("app", [HC(run_as_user=1000)]), [])
add("writable_root_fs.yaml", pod("app", [HC(readonly_fs=False)]),
    missing_labels("app", C0, [112]))
add("no_liveness_probe.yaml", pod("app", [HC(liveness=False)]),
    missing_labels("app", C0, [85]))
add("no_readiness_probe.yaml", pod("app", [HC(readiness=False)]),
    missing_labels("app", C0, [86]))
add("no_probes.yaml", pod("app", [HC(liveness=False, readiness=False)]),
    missing_labels("app", C0, [85, 86]))
add("secret_in_env.yaml", pod("app", [HC(env=[("DB_SECRET", "hunter2")])]),
    [exp("app", 73, f"{C0}/env/[0]/name", "name: DB_SECRET")])
add("password_in_env.yaml", pod("app", [HC(env=[("ADMIN_PASSWORD", "t0ps3cret")])]),
    [exp("app", 74, f"{C0}/env/[0]/name", "name: ADMIN_PASSWORD")])
add("two_bad_env_vars.yaml",
    pod("app", [HC(env=[("API_SECRET", "abc"), ("DB_PASSWORD", "def")])]),
    [exp("app", 73, f"{C0}/env/[0]/name", "name: API_SECRET"),
     exp("app", 74, f"{C0}/env/[1]/name", "name: DB_PASSWORD")])
add("plain_env_ok.yaml", pod("app", [HC(env=[("LOG_LEVEL", "info")])]), [])
add("host_network.yaml", pod("app", [HC()], host_network="true"),
    [exp("app", 139, "spec/hostNetwork", "hostNetwork: true")])
add("host_pid.yaml", pod("app", [HC()], host_pid="true"),
    [exp("app", 61, "spec/hostPID", "hostPID: true")])
add("host_ipc.yaml", pod("app", [HC()], host_ipc="true"),
    [exp("app", 60, "spec/hostIPC", "hostIPC: true")])
add("host_namespaces.yaml", pod("app", [HC()], host_network="true", host_pid="true",
                                host_ipc="true"),
    [exp("app", 139, "spec/hostNetwork", "hostNetwork: true"),
     exp("app", 61, "spec/hostPID", "hostPID: true"),
     exp("app", 60, "spec/hostIPC", "hostIPC: true")])
add("hostpath_volume.yaml",
    pod("app", [HC()], volumes=["    - name: data", "      hostPath:",
                                "        path: /var/lib/data"]),
    [exp("app", 103, "spec/volumes/[0]/hostPath", "hostPath:")])
add("emptydir_volume_ok.yaml",
    pod("app", [HC()], volumes=["    - name: scratch", "      emptyDir: {}"]), [])
add("automount_token.yaml", pod("app", [HC()], automount="true"),
    [exp("app", 5, "spec/automountServiceAccountToken", "automountServiceAccountToken: true")])
add("default_service_account.yaml", pod("app", [HC()], service_account="default"),
    [exp("app", 6, "spec/serviceAccountName", "serviceAccountName: default")])

# --- workloads ---
add("single_replica_deployment.yaml",
    workload("Deployment", "backend", [HC(indent=8)], replicas=1),
    [exp("backend", 45, "spec/replicas", "replicas: 1")])
add("zero_replica_statefulset.yaml",
    workload("StatefulSet", "db", [HC(indent=8)], replicas=0),
    [exp("db", 45, "spec/replicas", "replicas: 0")])
add("deployment_privileged.yaml",
    workload("Deployment", "runner", [HC(indent=8, privileged="true")]),
    [exp("runner", 52, f"{T0}/securityContext/privileged", "privileged: true")])
add("deployment_latest_tag.yaml",
    workload("Deployment", "edge", [HC(indent=8, image="envoy:latest")]),
    [exp("edge", 140, f"{T0}/image", "image: envoy:latest")])
add("deployment_secret_env.yaml",
    workload("Deployment", "api", [HC(indent=8, env=[("JWT_SECRET", "xyz")])]),
    [exp("api", 73, f"{T0}/env/[0]/name", "name: JWT_SECRET")])
add("daemonset_sparse.yaml",
    workload("DaemonSet", "agent",
             [["        - name: agent", "          image: agent:latest"]]),
    [exp("agent", 140, f"{T0}/image", "image: agent:latest")]
    + sparse_container_labels("agent", T0))

# --- RBAC ---
add("role_wildcard_verbs.yaml", role("Role", "admin-ish", ["get", "*"], ["pods"]),
    [exp("admin-ish", 51, "rules/[0]/verbs/[1]", '- "*"')])
add("clusterrole_wildcard_resources.yaml",
    role("ClusterRole", "broad", ["get", "watch"], ["*"]),
    [exp("broad", 50, "rules/[0]/resources/[0]", '- "*"')])
add("role_wildcard_both.yaml", role("Role", "supreme", ["*"], ["*"]),
    [exp("supreme", 51, "rules/[0]/verbs/[0]", '- "*"', 2),
     exp("supreme", 50, "rules/[0]/resources/[0]", '- "*"', 1)])

# --- structure variants ---
two_containers = pod("pair", [HC(name="main"),
                              HC(name="sidecar", image="busybox:latest", privileged="true")])
add("multi_container_pod.yaml", two_containers,
    [exp("pair", 140, "spec/containers/[1]/image", "image: busybox:latest"),
     exp("pair", 52, "spec/containers/[1]/securityContext/privileged", "privileged: true")])

multi_doc = pod("web", [HC()]) + "---\n" + pod("tool", [HC(privileged="true")])
add("multi_document.yaml", multi_doc,
    [exp("tool", 52, f"{C0}/securityContext/privileged", "privileged: true")])

add("comments_and_blanks.yaml",
    pod("noted", [HC(privileged="true")], head_comment="reviewed 2025-11-02"),
    [exp("noted", 52, f"{C0}/securityContext/privileged", "privileged: true")])

json_pod = """{
  "apiVersion": "v1",
  "kind": "Pod",
  "metadata": {
    "name": "jsonpod",
    "namespace": "prod"
  },
  "spec": {
    "securityContext": {
      "privileged": true
    },
    "containers": [
      {
        "name": "main",
        "image": "registry.example.com/app:1.4.2"
      }
    ]
  }
}
"""
add("json_format_pod.json", json_pod,
    [exp("jsonpod", 52, "spec/securityContext/privileged", '"privileged": true')]
    + sparse_container_labels("jsonpod", C0))

kitchen = pod("messy", [HC(image="redis:latest", cap_add=["NET_ADMIN"],
                           privileged="true", env=[("REDIS_SECRET", "p")])],
              namespace="default", host_network="true")
add("kitchen_sink.yaml", kitchen,
    [exp("messy", 9, "metadata/namespace", "namespace: default"),
     exp("messy", 139, "spec/hostNetwork", "hostNetwork: true"),
     exp("messy", 140, f"{C0}/image", "image: redis:latest"),
     exp("messy", 97, f"{C0}/securityContext/capabilities/add", "add:"),
     exp("messy", 52, f"{C0}/securityContext/privileged", "privileged: true"),
     exp("messy", 73, f"{C0}/env/[0]/name", "name: REDIS_SECRET")])


def main():
    os.makedirs(KCF_DIR, exist_ok=True)
    expectations = {}
    for name, (text, labels) in sorted(FIXTURES.items()):
        with open(os.path.join(KCF_DIR, name), "w") as f:
            f.write(text)
        resolved = []
        for lab in labels:
            entry = {"resource": lab["resource"], "id": lab["id"], "path": lab["path"]}
            if lab["needle"] is not None:
                entry["line"] = find_line(text, lab["needle"], lab["occurrence"])
            resolved.append(entry)
        expectations[name] = resolved

    # parse-error fixtures live beside the corpus but carry no labels
    with open(os.path.join(KCF_DIR, "malformed.yaml"), "w") as f:
        f.write("apiVersion: v1\nkind: Pod\nmetadata:\n  name: broken\n  [unclosed\n")
    with open(os.path.join(KCF_DIR, "empty.yaml"), "w") as f:
        f.write("   \n\n  \n")

    with open(os.path.join(FIXTURE_DIR, "expected_labels.json"), "w") as f:
        json.dump(expectations, f, indent=2)
        f.write("\n")
    print(f"wrote {len(FIXTURES)} labeled fixtures "
          f"({sum(len(v) for _, v in FIXTURES.values())} expected labels)")


if __name__ == "__main__":
    main()
