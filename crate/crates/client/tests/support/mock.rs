//! A scripted stand-in for the explorer API on a local port.

#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value};

#[derive(Clone)]
pub enum Account {
    /// Verified source: file name and content pairs, sent as standard JSON.
    Source(Vec<(String, String)>),
    /// Explorer answer for an unverified contract.
    Unverified,
    /// Transaction senders, one entry per transaction.
    Transactions(Vec<String>),
    /// Always answers with this HTTP status.
    Status(u16),
    /// Answers with a server error this many times, then like the inner account.
    Flaky(usize, Box<Account>),
    /// Reports throttling inside a 200 response this many times first.
    Throttled(usize, Box<Account>),
}

pub struct MockExplorer {
    pub url: String,
    server: Arc<tiny_http::Server>,
    log: Arc<Mutex<Vec<(Instant, String)>>>,
    handle: Option<thread::JoinHandle<()>>,
}

impl MockExplorer {
    pub fn start(accounts: HashMap<String, Account>, delay: Duration) -> MockExplorer {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}/api", server.server_addr().to_ip().unwrap());
        let log = Arc::new(Mutex::new(Vec::new()));
        let accounts = Arc::new(Mutex::new(accounts));
        let (srv, lg) = (server.clone(), log.clone());
        let handle = thread::spawn(move || {
            for request in srv.incoming_requests() {
                let (accounts, lg) = (accounts.clone(), lg.clone());
                thread::spawn(move || {
                    let query = request.url().split_once('?').map(|(_, q)| q.to_owned()).unwrap_or_default();
                    lg.lock().unwrap().push((Instant::now(), query.clone()));
                    thread::sleep(delay);
                    let params: HashMap<String, String> = query
                        .split('&')
                        .filter_map(|kv| kv.split_once('='))
                        .map(|(k, v)| (k.to_owned(), v.to_owned()))
                        .collect();
                    let (status, body) = respond(&accounts, &params);
                    let response = tiny_http::Response::from_string(body).with_status_code(status);
                    let _ = request.respond(response);
                });
            }
        });
        MockExplorer { url, server, log, handle: Some(handle) }
    }

    /// Requests received so far.
    pub fn hits(&self) -> usize {
        self.log.lock().unwrap().len()
    }

    pub fn arrivals(&self) -> Vec<Instant> {
        self.log.lock().unwrap().iter().map(|(t, _)| *t).collect()
    }

    pub fn queries(&self) -> Vec<String> {
        self.log.lock().unwrap().iter().map(|(_, q)| q.clone()).collect()
    }
}

impl Drop for MockExplorer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn respond(accounts: &Mutex<HashMap<String, Account>>, params: &HashMap<String, String>) -> (u16, String) {
    let address = params.get("address").cloned().unwrap_or_default().to_ascii_lowercase();
    let mut accounts = accounts.lock().unwrap();
    let Some(account) = accounts.get_mut(&address) else {
        return (200, not_found(params));
    };
    loop {
        match account {
            Account::Flaky(0, inner) | Account::Throttled(0, inner) => *account = (**inner).clone(),
            Account::Flaky(n, _) => {
                *n -= 1;
                return (503, "busy".into());
            }
            Account::Throttled(n, _) => {
                *n -= 1;
                let body = json!({"status": "0", "message": "NOTOK", "result": "Max rate limit reached"});
                return (200, body.to_string());
            }
            Account::Status(code) => return (*code, String::new()),
            Account::Source(files) if params.get("action").map(String::as_str) == Some("getsourcecode") => {
                let sources: serde_json::Map<String, Value> =
                    files.iter().map(|(n, c)| (n.clone(), json!({ "content": c }))).collect();
                let standard = json!({"language": "Solidity", "sources": sources});
                let record = json!({"SourceCode": format!("{{{standard}}}"), "ContractName": "Mock"});
                return (200, json!({"status": "1", "message": "OK", "result": [record]}).to_string());
            }
            Account::Unverified if params.get("action").map(String::as_str) == Some("getsourcecode") => {
                let record = json!({"SourceCode": "", "ABI": "Contract source code not verified"});
                return (200, json!({"status": "1", "message": "OK", "result": [record]}).to_string());
            }
            Account::Transactions(senders) if params.get("action").map(String::as_str) == Some("txlist") => {
                if senders.is_empty() {
                    return (200, not_found(params));
                }
                let txs: Vec<Value> =
                    senders.iter().map(|from| json!({"from": from, "to": address, "value": "0"})).collect();
                return (200, json!({"status": "1", "message": "OK", "result": txs}).to_string());
            }
            _ => return (200, not_found(params)),
        }
    }
}

fn not_found(params: &HashMap<String, String>) -> String {
    if params.get("action").map(String::as_str) == Some("txlist") {
        json!({"status": "0", "message": "No transactions found", "result": []}).to_string()
    } else {
        json!({"status": "0", "message": "NOTOK", "result": "Invalid Address format"}).to_string()
    }
}
